#pragma once

// Closed-loop simulation of the continuous-time Van der Pol oscillator
// with an added integrator under the sampled two-loop law u = u1 + u2:
// zero-order-hold actuation, classic RK4 between samples, disturbance
// generators, RMS metrics and reachable-set membership checks.

#include "polyiss/esn.hpp"
#include "polyiss/lmi.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace polyiss::sim {

// (x2, -x1 + theta (1 - x1^2) x2 + u + d, x1)
Eigen::Vector3d vdp_derivative(const Eigen::Vector3d& x, double theta, double u, double d);

// First-order low-pass filtered standard white noise, rescaled so every
// sample satisfies |d| <= bound.
std::vector<double> gen_filtered_noise(int n_samples, double cutoff_hz, double bound, double ts,
                                       std::uint64_t seed);

class DisturbanceSignal {
 public:
  static DisturbanceSignal zero();
  // amplitude * sum_i sin(f_i t), frequencies in rad/s.
  static DisturbanceSignal sinusoid(double amplitude, std::vector<double> frequencies);
  // Discrete filtered noise held constant over each sampling period.
  static DisturbanceSignal filtered_noise(int n_samples, double cutoff_hz, double bound, double ts,
                                          std::uint64_t seed);
  static DisturbanceSignal from_samples(std::vector<double> samples, double ts);

  double at(double t) const;

 private:
  enum class Kind { Zero, Sinusoid, Samples };
  Kind kind_ = Kind::Zero;
  double amplitude_ = 0.0;
  std::vector<double> frequencies_;
  std::vector<double> samples_;
  double ts_ = 0.0;
};

// One sampling period with u held constant (ZOH) and d evaluated at the
// integrator sub-times.
Eigen::Vector3d integrate_zoh(const Eigen::Vector3d& x, double theta, double u,
                              const DisturbanceSignal& d, double t0, double ts, int substeps);

struct TraceRow {
  double t = 0.0;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double y = 0.0, u1 = 0.0, u2 = 0.0, u = 0.0, d = 0.0;
};

struct SimTrace {
  double ts = 0.1;
  std::vector<TraceRow> rows;
  bool diverged = false;
  std::string controller;  // "robust" | "combined" | "excitation"
  std::uint64_t seed = 0;

  std::vector<double> y() const;
  std::vector<double> u1() const;
  std::vector<double> u2() const;
  std::vector<double> d() const;
};

struct SimScenario {
  double theta = 0.75;
  Eigen::Vector3d x0 = Eigen::Vector3d::Zero();
  double duration = 60.0;
  double ts = 0.1;
  int substeps = 10;
};

// Per sample: u1 = K(x) x; u2 from the inverse-model controller, from the
// excitation sequence, or zero; ZOH integrate one period; log the row.
// A non-finite state aborts with the partial trace flagged as diverged.
SimTrace simulate(const SimScenario& scenario, const lmi::GainFunction& gains,
                  esn::InverseController* controller, const std::vector<double>* u2_sequence,
                  const DisturbanceSignal& disturbance);

double rms(const std::vector<double>& samples);
// 100 (1 - rms_combined / rms_robust)
double improvement_factor(double rms_combined, double rms_robust);

struct ContainmentReport {
  double max_quadform = 0.0;
  int violations = 0;  // samples with x' P x > 1
};

ContainmentReport check_containment(const SimTrace& trace, const Eigen::MatrixXd& p);

}  // namespace polyiss::sim
