#include "polyiss/esn.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <stdexcept>

namespace polyiss::esn {

void EsnConfig::validate() const {
  if (n < 1) throw std::invalid_argument("esn: reservoir size must be >= 1");
  if (n_upsilon < 1) throw std::invalid_argument("esn: input dimension must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("esn: gamma must be in (0,1)");
  if (!(rho_r > 0.0 && rho_r < 1.0)) throw std::invalid_argument("esn: rho_r must be in (0,1)");
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("esn: density must be in (0,1]");
  if (lambda_ridge < 0.0) throw std::invalid_argument("esn: lambda_ridge must be >= 0");
}

EsnModel init_reservoir(const EsnConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> mask(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  EsnModel model;
  model.config = config;
  model.w_reservoir.resize(config.n, config.n);
  for (int i = 0; i < config.n; ++i) {
    for (int j = 0; j < config.n; ++j) {
      const bool keep = mask(rng) < config.density;
      const double value = gauss(rng);
      model.w_reservoir(i, j) = keep ? value : 0.0;
    }
  }
  model.w_input.resize(config.n, config.n_upsilon);
  for (int i = 0; i < config.n; ++i) {
    for (int j = 0; j < config.n_upsilon; ++j) model.w_input(i, j) = config.rho_upsilon * gauss(rng);
  }
  model.w_bias.resize(config.n);
  for (int i = 0; i < config.n; ++i) model.w_bias[i] = config.rho_bias * gauss(rng);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(model.w_reservoir);
  const double sigma_max = svd.singularValues()(0);
  if (!(sigma_max > 0.0))
    throw std::runtime_error("esn: degenerate reservoir draw (zero matrix)");
  model.w_reservoir *= config.rho_r / sigma_max;

  model.w_readout = Eigen::MatrixXd::Zero(1, config.n);
  return model;
}

Eigen::VectorXd step(const EsnModel& model, const Eigen::VectorXd& xi,
                     const Eigen::VectorXd& upsilon) {
  if (xi.size() != model.config.n || upsilon.size() != model.config.n_upsilon)
    throw std::invalid_argument("esn step: dimension mismatch");
  const Eigen::VectorXd pre = model.w_reservoir * xi + model.w_input * upsilon + model.w_bias;
  return (1.0 - model.config.gamma) * xi + model.config.gamma * pre.array().tanh().matrix();
}

Eigen::MatrixXd run_collect(const EsnModel& model, const Eigen::MatrixXd& inputs, int washout,
                            const Eigen::VectorXd& xi0) {
  const int rows = static_cast<int>(inputs.rows());
  if (washout < 0 || rows <= washout)
    throw std::invalid_argument("esn run_collect: sequence not longer than washout");
  Eigen::VectorXd xi = xi0.size() == 0 ? Eigen::VectorXd::Zero(model.config.n) : xi0;

  Eigen::MatrixXd states(rows - washout, model.config.n);
  for (int k = 0; k < rows; ++k) {
    xi = step(model, xi, inputs.row(k).transpose());
    if (k >= washout) states.row(k - washout) = xi.transpose();
  }
  return states;
}

Eigen::MatrixXd ridge_train(const Eigen::MatrixXd& xi, const Eigen::MatrixXd& sigma,
                            double lambda) {
  if (xi.rows() != sigma.rows())
    throw std::invalid_argument("ridge_train: row count mismatch between states and targets");
  if (lambda < 0.0) throw std::invalid_argument("ridge_train: lambda must be >= 0");

  const int n = static_cast<int>(xi.cols());
  const Eigen::MatrixXd normal = xi.transpose() * xi + lambda * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd rhs = xi.transpose() * sigma;

  Eigen::MatrixXd weights;
  if (lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible())
      throw std::runtime_error("ridge_train: singular normal matrix; use lambda > 0");
    weights = lu.solve(rhs);
  } else {
    weights = normal.ldlt().solve(rhs);
  }
  return weights.transpose();
}

double saturate_u2(double u2_raw, double eta_u) {
  if (eta_u <= 0.0) throw std::invalid_argument("saturate_u2: eta_u must be positive");
  const double s = std::sqrt(2.0) * eta_u;
  return std::tanh(s * u2_raw) / s;
}

void EmbeddingSpec::validate() const {
  if (m < 1) throw std::invalid_argument("embedding: m must be >= 1");
  if (delta < 1) throw std::invalid_argument("embedding: delta must be >= 1");
}

InverseDataset build_inverse_dataset(const std::vector<double>& y, const std::vector<double>& u1,
                                     const std::vector<double>& u2, const EmbeddingSpec& spec) {
  spec.validate();
  const int t = static_cast<int>(y.size());
  if (static_cast<int>(u1.size()) != t || static_cast<int>(u2.size()) != t)
    throw std::invalid_argument("build_inverse_dataset: signal length mismatch");
  const int k_min = spec.min_history();
  if (t <= k_min)
    throw std::invalid_argument("build_inverse_dataset: trace shorter than the lag horizon");

  const int rows = t - k_min;
  InverseDataset ds;
  ds.inputs.resize(rows, spec.input_dim());
  ds.targets.resize(rows);
  for (int k = k_min; k < t; ++k) {
    const int r = k - k_min;
    ds.inputs(r, 0) = y[k];
    for (int j = 1; j <= spec.m; ++j) {
      ds.inputs(r, j) = y[k - j * spec.delta];
      ds.inputs(r, spec.m + j) = u1[k - j * spec.delta];
      ds.inputs(r, 2 * spec.m + j) = u2[k - (j + 1) * spec.delta];
    }
    ds.targets[r] = u2[k - spec.delta];
  }
  return ds;
}

InverseController::InverseController(EsnModel model, EmbeddingSpec spec, double eta_u)
    : model_(std::move(model)), spec_(spec), eta_u_(eta_u) {
  spec_.validate();
  if (model_.config.n_upsilon != spec_.input_dim())
    throw std::invalid_argument("InverseController: model input dimension != embedding layout");
  if (eta_u_ <= 0.0) throw std::invalid_argument("InverseController: eta_u must be positive");
  reset();
}

void InverseController::reset() {
  xi_ = Eigen::VectorXd::Zero(model_.config.n);
  y_hist_.assign((spec_.m - 1) * spec_.delta + 1, 0.0);
  u1_hist_.assign((spec_.m - 1) * spec_.delta + 1, 0.0);
  u2_hist_.assign(spec_.m * spec_.delta, 0.0);
}

double InverseController::step_control(double y_k, double u1_k) {
  y_hist_.push_front(y_k);
  y_hist_.pop_back();
  u1_hist_.push_front(u1_k);
  u1_hist_.pop_back();

  // Shifted layout: the reference r[k+delta] = 0 sits in the slot the
  // training rows filled with y[k].
  Eigen::VectorXd upsilon(spec_.input_dim());
  upsilon[0] = 0.0;
  for (int j = 1; j <= spec_.m; ++j) {
    upsilon[j] = y_hist_[(j - 1) * spec_.delta];
    upsilon[spec_.m + j] = u1_hist_[(j - 1) * spec_.delta];
    upsilon[2 * spec_.m + j] = u2_hist_[j * spec_.delta - 1];
  }
  xi_ = step(model_, xi_, upsilon);
  const double raw = model_.w_readout.row(0).dot(xi_);
  const double u2 = saturate_u2(raw, eta_u_);
  u2_hist_.push_front(u2);
  u2_hist_.pop_back();
  return u2;
}

}  // namespace polyiss::esn
