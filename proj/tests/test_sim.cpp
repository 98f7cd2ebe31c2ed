#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "polyiss/sim.hpp"

#include <cmath>

using namespace polyiss;
using Eigen::Vector3d;

namespace {

lmi::GainFunction zero_gains() {
  return {Eigen::MatrixXd::Zero(1, 3), Eigen::MatrixXd::Zero(1, 6), make_vdp_model(0.1).basis};
}

// Goertzel-style single-frequency energy of a sampled signal.
double band_energy(const std::vector<double>& s, double freq_hz, double ts) {
  const double w = 2.0 * M_PI * freq_hz * ts;
  double re = 0.0, im = 0.0;
  for (size_t k = 0; k < s.size(); ++k) {
    re += s[k] * std::cos(w * static_cast<double>(k));
    im += s[k] * std::sin(w * static_cast<double>(k));
  }
  return re * re + im * im;
}

}  // namespace

TEST_CASE("Van der Pol derivative") {
  SUBCASE("origin is an equilibrium") {
    CHECK(sim::vdp_derivative(Vector3d::Zero(), 0.75, 0.0, 0.0).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("damping term vanishes at x1 = 1") {
    const Vector3d dx = sim::vdp_derivative(Vector3d(1, 1, 0), 0.75, 0.0, 0.0);
    CHECK(dx[0] == 1.0);
    CHECK(dx[1] == -1.0);
    CHECK(dx[2] == 1.0);
  }
  SUBCASE("hand-substituted point") {
    const Vector3d dx = sim::vdp_derivative(Vector3d(0.5, 2, 0), 0.5, 1.0, -1.0);
    CHECK(dx[0] == doctest::Approx(2.0));
    CHECK(dx[1] == doctest::Approx(0.25));
    CHECK(dx[2] == doctest::Approx(0.5));
  }
}

TEST_CASE("ZOH integration") {
  SUBCASE("origin with zero input stays put") {
    const Vector3d x = sim::integrate_zoh(Vector3d::Zero(), 0.75, 0.0,
                                          sim::DisturbanceSignal::zero(), 0.0, 0.1, 10);
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("pure integrator: constant x1 = c gives dx3 = c Ts exactly") {
    // u = c holds x2 at zero, so x1 stays at c and x3 integrates it.
    const double c = 0.7, ts = 0.1;
    const Vector3d x0(c, 0.0, 1.5);
    const Vector3d x1 = sim::integrate_zoh(x0, 0.6, c, sim::DisturbanceSignal::zero(), 0.0, ts, 10);
    CHECK(std::abs(x1[2] - (1.5 + c * ts)) < 1e-12);
    CHECK(std::abs(x1[0] - c) < 1e-12);
    CHECK(std::abs(x1[1]) < 1e-12);
  }
  SUBCASE("RK4 and Euler differ at second order in the step") {
    const Vector3d x0(0.3, -0.4, 0.1);
    const double theta = 0.75, u = 0.2;
    auto euler = [&](double h) {
      return (x0 + h * sim::vdp_derivative(x0, theta, u, 0.0)).eval();
    };
    auto rk4 = [&](double h) {
      return sim::integrate_zoh(x0, theta, u, sim::DisturbanceSignal::zero(), 0.0, h, 1);
    };
    const double d1 = (rk4(0.1) - euler(0.1)).norm();
    const double d2 = (rk4(0.05) - euler(0.05)).norm();
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.15));
  }
  SUBCASE("substeps must be positive") {
    CHECK_THROWS_AS(
        sim::integrate_zoh(Vector3d::Zero(), 0.75, 0.0, sim::DisturbanceSignal::zero(), 0, 0.1, 0),
        std::invalid_argument);
  }
}

TEST_CASE("disturbance signals") {
  SUBCASE("figure-4 sinusoid stays inside D") {
    const auto d = sim::DisturbanceSignal::sinusoid(0.25 * std::sqrt(2.0), {1.0, 2.0});
    double peak = 0.0;
    for (double t = 0.0; t < 20.0; t += 1e-3) peak = std::max(peak, std::abs(d.at(t)));
    CHECK(peak == doctest::Approx(0.6223).epsilon(1e-3));
    CHECK(peak < 1.0 / std::sqrt(2.0));
  }
  SUBCASE("zero spec emits zeros") {
    const auto d = sim::DisturbanceSignal::zero();
    CHECK(d.at(0.0) == 0.0);
    CHECK(d.at(17.3) == 0.0);
  }
  SUBCASE("filtered noise respects the bound and concentrates below the cutoff") {
    const double bound = 1.0 / std::sqrt(2.0);
    const auto s = sim::gen_filtered_noise(5000, 0.5, bound, 0.1, 7);
    double peak = 0.0;
    for (double v : s) peak = std::max(peak, std::abs(v));
    CHECK(peak <= bound);
    CHECK(peak == doctest::Approx(bound));

    double low = 0.0, high = 0.0;
    int n_low = 0, n_high = 0;
    for (double f = 0.05; f < 0.45; f += 0.05, ++n_low) low += band_energy(s, f, 0.1);
    for (double f = 2.0; f < 4.4; f += 0.05, ++n_high) high += band_energy(s, f, 0.1);
    CHECK(low / n_low > 5.0 * (high / n_high));
  }
  SUBCASE("filtered noise is deterministic per seed") {
    const auto a = sim::gen_filtered_noise(100, 0.5, 1.0, 0.1, 9);
    const auto b = sim::gen_filtered_noise(100, 0.5, 1.0, 0.1, 9);
    const auto c = sim::gen_filtered_noise(100, 0.5, 1.0, 0.1, 10);
    CHECK(a == b);
    CHECK(a != c);
  }
  SUBCASE("sampled signals are held constant within a period") {
    const auto d = sim::DisturbanceSignal::from_samples({1.0, 2.0, 3.0}, 0.1);
    CHECK(d.at(0.0) == 1.0);
    CHECK(d.at(0.0999) == 1.0);
    CHECK(d.at(0.1) == 2.0);
    CHECK(d.at(10.0) == 3.0);  // clamped at the end
  }
}

TEST_CASE("closed-loop simulation") {
  sim::SimScenario scenario;
  scenario.theta = 0.75;
  scenario.duration = 2.0;

  SUBCASE("zero everything gives the identically zero trace") {
    const auto trace =
        sim::simulate(scenario, zero_gains(), nullptr, nullptr, sim::DisturbanceSignal::zero());
    REQUIRE(trace.rows.size() == 20);
    for (const auto& r : trace.rows) {
      CHECK(r.x.cwiseAbs().maxCoeff() == 0.0);
      CHECK(r.u == 0.0);
    }
    CHECK(trace.controller == "robust");
    CHECK(!trace.diverged);
  }
  SUBCASE("u2 sequence is applied verbatim (ZOH log)") {
    std::vector<double> u2(20);
    for (size_t k = 0; k < u2.size(); ++k) u2[k] = 0.01 * static_cast<double>(k);
    const auto trace =
        sim::simulate(scenario, zero_gains(), nullptr, &u2, sim::DisturbanceSignal::zero());
    for (size_t k = 0; k < trace.rows.size(); ++k) {
      CHECK(trace.rows[k].u2 == u2[k]);
      CHECK(trace.rows[k].u == trace.rows[k].u1 + trace.rows[k].u2);
      CHECK(trace.rows[k].y == trace.rows[k].x[0]);
    }
    CHECK(trace.controller == "excitation");
  }
  SUBCASE("time stamps advance by Ts") {
    const auto trace =
        sim::simulate(scenario, zero_gains(), nullptr, nullptr, sim::DisturbanceSignal::zero());
    for (size_t k = 1; k < trace.rows.size(); ++k) {
      CHECK(trace.rows[k].t - trace.rows[k - 1].t == doctest::Approx(0.1).epsilon(1e-12));
    }
  }
  SUBCASE("identical runs produce identical traces") {
    const auto d = sim::DisturbanceSignal::filtered_noise(64, 0.5, 0.7, 0.1, 3);
    scenario.x0 = Vector3d(0.01, 0.0, 0.0);
    const auto a = sim::simulate(scenario, zero_gains(), nullptr, nullptr, d);
    const auto b = sim::simulate(scenario, zero_gains(), nullptr, nullptr, d);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t k = 0; k < a.rows.size(); ++k) {
      CHECK(a.rows[k].x == b.rows[k].x);
      CHECK(a.rows[k].u == b.rows[k].u);
    }
  }
  SUBCASE("destabilizing feedback is reported as divergence with a partial trace") {
    lmi::GainFunction bad = zero_gains();
    bad.K0(0, 0) = 1e8;
    scenario.x0 = Vector3d(0.1, 0.0, 0.0);
    scenario.duration = 10.0;
    const auto trace = sim::simulate(scenario, bad, nullptr, nullptr, sim::DisturbanceSignal::zero());
    CHECK(trace.diverged);
    CHECK(trace.rows.size() < 100);
  }
  SUBCASE("input validation") {
    scenario.duration = -1.0;
    CHECK_THROWS_AS(
        sim::simulate(scenario, zero_gains(), nullptr, nullptr, sim::DisturbanceSignal::zero()),
        std::invalid_argument);
  }
}

TEST_CASE("metrics") {
  SUBCASE("rms of a constant is its magnitude") {
    CHECK(sim::rms({-3.0, -3.0, -3.0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(sim::rms({}), std::invalid_argument);
  }
  SUBCASE("equal traces give zero improvement") {
    CHECK(sim::improvement_factor(2.0, 2.0) == doctest::Approx(0.0));
  }
  SUBCASE("the section-V improvement factor corresponds to the RMS ratio") {
    const double rms_robust = 0.037;
    const double rms_combined = rms_robust * (1.0 - 0.5436);
    CHECK(sim::improvement_factor(rms_combined, rms_robust) == doctest::Approx(54.36));
  }
}

TEST_CASE("containment checks") {
  const Eigen::MatrixXd p = 100.0 * Eigen::MatrixXd::Identity(3, 3);

  sim::SimTrace trace;
  trace.ts = 0.1;
  for (int k = 0; k < 10; ++k) {
    sim::TraceRow r;
    r.x = Vector3d(0.01 * k, 0.0, 0.0);
    trace.rows.push_back(r);
  }
  SUBCASE("small trace stays inside") {
    const auto rep = sim::check_containment(trace, p);
    CHECK(rep.violations == 0);
    CHECK(rep.max_quadform == doctest::Approx(100.0 * 0.09 * 0.09));
  }
  SUBCASE("scaled trace violates (negative control)") {
    for (auto& r : trace.rows) r.x *= 100.0;
    const auto rep = sim::check_containment(trace, p);
    CHECK(rep.violations > 0);
  }
  SUBCASE("zero trace is trivially contained") {
    for (auto& r : trace.rows) r.x.setZero();
    const auto rep = sim::check_containment(trace, p);
    CHECK(rep.violations == 0);
    CHECK(rep.max_quadform == 0.0);
  }
}
