#pragma once

// Echo State Network: leaky-integrator reservoir with elementwise tanh,
// fixed random input/reservoir/bias weights, ridge-trained linear readout.
// Also the inverse-model machinery: delay-embedding dataset construction
// and the shifted-input control law with its tanh saturation.

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <vector>

namespace polyiss::esn {

struct EsnConfig {
  int n = 200;          // reservoir size
  int n_upsilon = 0;    // input dimension
  double gamma = 0.6;   // leak rate
  double rho_r = 0.5;   // reservoir weight scale (largest singular value)
  double rho_upsilon = 1.0;
  double rho_bias = 0.1;
  double density = 0.9;  // fraction of nonzero reservoir entries
  std::uint64_t seed = 42;
  double lambda_ridge = 1e-6;

  void validate() const;
};

struct EsnModel {
  Eigen::MatrixXd w_reservoir;  // n x n, ||.||_2 == rho_r
  Eigen::MatrixXd w_input;      // n x n_upsilon
  Eigen::VectorXd w_bias;       // n
  Eigen::MatrixXd w_readout;    // n_sigma x n; zero rows until trained
  EsnConfig config;
};

// Draw order (fixed for reproducibility): reservoir entries row-major with
// a uniform density mask and a normal value per entry, then input weights,
// then bias. The reservoir matrix is rescaled so its largest singular
// value equals rho_r.
EsnModel init_reservoir(const EsnConfig& config);

// xi+ = (1 - gamma) xi + gamma tanh(Wr xi + Win upsilon + bias)
Eigen::VectorXd step(const EsnModel& model, const Eigen::VectorXd& xi,
                     const Eigen::VectorXd& upsilon);

// Feeds input rows in order from xi(0) (zero unless given) and returns the
// post-washout reservoir states, one row per retained input row.
Eigen::MatrixXd run_collect(const EsnModel& model, const Eigen::MatrixXd& inputs, int washout,
                            const Eigen::VectorXd& xi0 = Eigen::VectorXd());

// Solves (Xi' Xi + lambda I) W = Xi' Sigma per output channel and returns
// the readout in row form (n_sigma x n). lambda = 0 requires a nonsingular
// normal matrix.
Eigen::MatrixXd ridge_train(const Eigen::MatrixXd& xi, const Eigen::MatrixXd& sigma,
                            double lambda);

// u2 = tanh(sqrt(2) eta_u u2_raw) / (sqrt(2) eta_u), so |u2| stays inside
// the admissible set U.
double saturate_u2(double u2_raw, double eta_u);

// Delay embedding of the scalar closed-loop signals. Slot layout (fixed,
// identical at training and control time):
//   [ y-current | y lags 1..m | u1 lags 1..m | u2 lags 1..m ]
// Training at time k fills it with
//   [ y[k] | y[k-j d] | u1[k-j d] | u2[k-(j+1) d] ]   target u2[k-d];
// control at time k shifts every signal by d and puts the reference where
// y[k] was:
//   [ r[k+d] | y[k-(j-1) d] | u1[k-(j-1) d] | u2[k-j d] ].
struct EmbeddingSpec {
  int m = 1;      // history count
  int delta = 2;  // delay in samples

  int input_dim() const { return 3 * m + 1; }
  int min_history() const { return (m + 1) * delta; }  // deepest lag
  void validate() const;
};

struct InverseDataset {
  Eigen::MatrixXd inputs;   // one embedding row per admissible sample
  Eigen::VectorXd targets;  // u2[k - delta]
};

InverseDataset build_inverse_dataset(const std::vector<double>& y, const std::vector<double>& u1,
                                     const std::vector<double>& u2, const EmbeddingSpec& spec);

// Runs the trained inverse model in closed loop for the regulation problem
// (r = 0). History buffers are zero-padded at startup; the reservoir state
// and histories advance once per call.
class InverseController {
 public:
  InverseController(EsnModel model, EmbeddingSpec spec, double eta_u);

  // Called once per sample with the current measurement and robust input;
  // returns the saturated correction u2[k].
  double step_control(double y_k, double u1_k);
  void reset();

  const EsnModel& model() const { return model_; }
  const EmbeddingSpec& spec() const { return spec_; }
  double eta_u() const { return eta_u_; }

 private:
  EsnModel model_;
  EmbeddingSpec spec_;
  double eta_u_;
  Eigen::VectorXd xi_;
  std::deque<double> y_hist_, u1_hist_, u2_hist_;
};

}  // namespace polyiss::esn
