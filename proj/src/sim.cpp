#include "polyiss/sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace polyiss::sim {

Eigen::Vector3d vdp_derivative(const Eigen::Vector3d& x, double theta, double u, double d) {
  return {x[1], -x[0] + theta * (1.0 - x[0] * x[0]) * x[1] + u + d, x[0]};
}

std::vector<double> gen_filtered_noise(int n_samples, double cutoff_hz, double bound, double ts,
                                       std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("gen_filtered_noise: need at least one sample");
  if (cutoff_hz <= 0.0 || bound <= 0.0 || ts <= 0.0)
    throw std::invalid_argument("gen_filtered_noise: cutoff, bound and ts must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double a = std::exp(-2.0 * M_PI * cutoff_hz * ts);

  std::vector<double> s(n_samples);
  double state = 0.0;
  double peak = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    state = a * state + (1.0 - a) * gauss(rng);
    s[k] = state;
    peak = std::max(peak, std::abs(state));
  }
  if (peak > 0.0) {
    const double scale = bound / peak;
    for (double& v : s) v = std::clamp(v * scale, -bound, bound);
  }
  return s;
}

DisturbanceSignal DisturbanceSignal::zero() { return DisturbanceSignal(); }

DisturbanceSignal DisturbanceSignal::sinusoid(double amplitude, std::vector<double> frequencies) {
  DisturbanceSignal d;
  d.kind_ = Kind::Sinusoid;
  d.amplitude_ = amplitude;
  d.frequencies_ = std::move(frequencies);
  return d;
}

DisturbanceSignal DisturbanceSignal::filtered_noise(int n_samples, double cutoff_hz, double bound,
                                                    double ts, std::uint64_t seed) {
  return from_samples(gen_filtered_noise(n_samples, cutoff_hz, bound, ts, seed), ts);
}

DisturbanceSignal DisturbanceSignal::from_samples(std::vector<double> samples, double ts) {
  if (samples.empty()) throw std::invalid_argument("DisturbanceSignal: empty sample list");
  if (ts <= 0.0) throw std::invalid_argument("DisturbanceSignal: ts must be positive");
  DisturbanceSignal d;
  d.kind_ = Kind::Samples;
  d.samples_ = std::move(samples);
  d.ts_ = ts;
  return d;
}

double DisturbanceSignal::at(double t) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sinusoid: {
      double v = 0.0;
      for (double f : frequencies_) v += std::sin(f * t);
      return amplitude_ * v;
    }
    case Kind::Samples: {
      const auto k = static_cast<std::ptrdiff_t>(std::floor(t / ts_ + 1e-9));
      const auto last = static_cast<std::ptrdiff_t>(samples_.size()) - 1;
      return samples_[std::clamp<std::ptrdiff_t>(k, 0, last)];
    }
  }
  return 0.0;
}

Eigen::Vector3d integrate_zoh(const Eigen::Vector3d& x, double theta, double u,
                              const DisturbanceSignal& d, double t0, double ts, int substeps) {
  if (substeps < 1) throw std::invalid_argument("integrate_zoh: substeps must be >= 1");
  const double h = ts / substeps;
  Eigen::Vector3d state = x;
  double t = t0;
  for (int s = 0; s < substeps; ++s) {
    const Eigen::Vector3d k1 = vdp_derivative(state, theta, u, d.at(t));
    const Eigen::Vector3d k2 = vdp_derivative(state + 0.5 * h * k1, theta, u, d.at(t + 0.5 * h));
    const Eigen::Vector3d k3 = vdp_derivative(state + 0.5 * h * k2, theta, u, d.at(t + 0.5 * h));
    const Eigen::Vector3d k4 = vdp_derivative(state + h * k3, theta, u, d.at(t + h));
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return state;
}

std::vector<double> SimTrace::y() const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.y);
  return v;
}
std::vector<double> SimTrace::u1() const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.u1);
  return v;
}
std::vector<double> SimTrace::u2() const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.u2);
  return v;
}
std::vector<double> SimTrace::d() const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.d);
  return v;
}

SimTrace simulate(const SimScenario& scenario, const lmi::GainFunction& gains,
                  esn::InverseController* controller, const std::vector<double>* u2_sequence,
                  const DisturbanceSignal& disturbance) {
  if (!(scenario.duration > 0.0) || !(scenario.ts > 0.0))
    throw std::invalid_argument("simulate: duration and ts must be positive");
  if (!scenario.x0.allFinite()) throw std::invalid_argument("simulate: x0 must be finite");
  if (controller != nullptr && u2_sequence != nullptr)
    throw std::invalid_argument("simulate: choose one u2 source");

  const int n = static_cast<int>(std::llround(scenario.duration / scenario.ts));
  if (u2_sequence != nullptr && static_cast<int>(u2_sequence->size()) < n)
    throw std::invalid_argument("simulate: u2 sequence shorter than the horizon");

  SimTrace trace;
  trace.ts = scenario.ts;
  trace.controller = controller ? "combined" : (u2_sequence ? "excitation" : "robust");
  trace.rows.reserve(n);

  Eigen::Vector3d x = scenario.x0;
  for (int k = 0; k < n; ++k) {
    const double t = k * scenario.ts;
    const double y = x[0];
    const double u1 = gains.u1(x)(0);
    const double u2 = controller   ? controller->step_control(y, u1)
                      : u2_sequence ? (*u2_sequence)[k]
                                    : 0.0;
    const double u = u1 + u2;

    TraceRow row;
    row.t = t;
    row.x = x;
    row.y = y;
    row.u1 = u1;
    row.u2 = u2;
    row.u = u;
    row.d = disturbance.at(t);
    trace.rows.push_back(row);

    x = integrate_zoh(x, scenario.theta, u, disturbance, t, scenario.ts, scenario.substeps);
    if (!x.allFinite()) {
      trace.diverged = true;
      break;
    }
  }
  return trace;
}

double rms(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("rms: empty signal");
  double acc = 0.0;
  for (double v : samples) acc += v * v;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double improvement_factor(double rms_combined, double rms_robust) {
  if (rms_robust <= 0.0) throw std::invalid_argument("improvement_factor: robust RMS must be > 0");
  return 100.0 * (1.0 - rms_combined / rms_robust);
}

ContainmentReport check_containment(const SimTrace& trace, const Eigen::MatrixXd& p) {
  if (p.rows() != 3 || p.cols() != 3)
    throw std::invalid_argument("check_containment: P must be 3x3");
  ContainmentReport report;
  for (const auto& row : trace.rows) {
    const double v = row.x.dot(p * row.x);
    report.max_quadform = std::max(report.max_quadform, v);
    if (v > 1.0) ++report.violations;
  }
  return report;
}

}  // namespace polyiss::sim
