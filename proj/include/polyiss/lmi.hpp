#pragma once

// LMI synthesis of the robust polynomial state-feedback law u1 = K(x) x:
// assembles the reachable-set containment constraints and the vertex
// ISS-decrease constraints, drives the SDP backend (feasibility and
// largest-eigenvalue minimization), recovers K0/K1 and the invariant
// ellipsoid, and re-verifies every certificate numerically.

#include "polyiss/polymodel.hpp"
#include "polyiss/sdp.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace polyiss::lmi {

struct SynthesisProblem {
  PolyQuasiLpvModel model;
  double mu = 0.3;
  double strictness_eps = 1e-7;  // shift applied to the strict inequalities
  bool minimize_lambda = true;
  // When set, synthesize at this single parameter value instead of the
  // full Theta vertex set (paper-reproduction mode).
  std::optional<Eigen::VectorXd> fixed_theta;
  sdp::Options solver_options;

  std::vector<Eigen::VectorXd> synthesis_thetas() const;
  void validate() const;
};

enum class SynthStatus { Optimal, Infeasible, BackendFailure };

struct SynthesisSolution {
  SynthStatus status = SynthStatus::BackendFailure;
  Eigen::MatrixXd Q, G, M0, M1, L;
  Eigen::MatrixXd K0, K1;
  double mu = 0.0;
  double lambda = 0.0;
  double strictness_eps = 0.0;
  std::vector<Eigen::VectorXd> synth_theta;
  // Post-hoc eigenvalue margins, re-computed from the returned values:
  // min over half-planes of lambda_min(containment block) and min over
  // vertices of -lambda_max(synthesis block).
  double margin_containment = 0.0;
  double margin_synthesis = 0.0;
  std::string solver_message;

  bool feasible() const { return status == SynthStatus::Optimal; }
};

// Literal Eq.-style matrices at numeric decision values; these are the
// post-hoc verification path and are assembled independently of the
// coefficient form handed to the SDP backend.
Eigen::MatrixXd containment_matrix(const Eigen::MatrixXd& Q, const Eigen::VectorXd& h);
Eigen::MatrixXd synthesis_matrix(const PolyQuasiLpvModel& model, const Eigen::VectorXd& x_vertex,
                                 const Eigen::VectorXd& theta_vertex, double mu,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& M0, const Eigen::MatrixXd& M1,
                                 const Eigen::MatrixXd& L);

// Coefficient-form assembly for the backend (exposed for testing).
namespace detail {

struct VarLayout {
  int nx = 0, nu = 0, nm = 0, nw = 0;
  int lifted = 0;      // nm * nx
  int block_dim = 0;   // 2 nx + 2 lifted + nw
  int mult_cols = 0;   // 2 * lifted
  bool with_lambda = false;

  int q(int i, int j) const;   // symmetric Q, canonical lower index
  int g(int i, int j) const;
  int m0(int i, int j) const;
  int m1(int i, int j) const;
  int l(int r, int s) const;
  int lambda() const;
  int count() const;

  static VarLayout of(const PolyQuasiLpvModel& model, bool with_lambda);
};

sdp::Problem build_synthesis_sdp(const SynthesisProblem& problem, const VarLayout& layout);

}  // namespace detail

SynthesisSolution solve_synthesis(const SynthesisProblem& problem);

struct MuSweepEntry {
  double mu = 0.0;
  bool feasible = false;
  double lambda = 0.0;
};

struct LineSearchResult {
  SynthesisSolution best;
  std::vector<MuSweepEntry> sweep;
};

class AllInfeasibleError : public std::runtime_error {
 public:
  AllInfeasibleError() : std::runtime_error("synthesis infeasible at every mu grid point") {}
};

std::vector<double> default_mu_grid();  // 0.05 : 0.05 : 0.95

// Solves per grid point and returns the feasible solution with smallest
// lambda; optional golden-section refinement around the best grid point.
LineSearchResult line_search_mu(const SynthesisProblem& problem_template,
                                const std::vector<double>& grid, int refine_iters = 0);

// Polynomial gain K(x) = K0 + K1 Pi(x).
struct GainFunction {
  Eigen::MatrixXd K0, K1;
  MonomialBasis basis;

  Eigen::MatrixXd K_at(const Eigen::VectorXd& x) const;
  Eigen::VectorXd u1(const Eigen::VectorXd& x) const;
};

// K0 = M0 G^{-1}, K1 = M1 Ga^{-1} with Ga = diag{G, ..., G}.
GainFunction recover_gains(const Eigen::MatrixXd& M0, const Eigen::MatrixXd& M1,
                           const Eigen::MatrixXd& G, const MonomialBasis& basis);

// R = {x : x^T P x <= 1} with P = Q^{-1}.
struct Ellipsoid {
  Eigen::MatrixXd P;

  double quadform(const Eigen::VectorXd& x) const { return x.dot(P * x); }
  bool contains(const Eigen::VectorXd& x) const { return quadform(x) <= 1.0; }
  // Half-width of the axis-aligned bounding box along coordinate i.
  Eigen::VectorXd bounding_box(const Eigen::MatrixXd& Q) const;
};

Ellipsoid reachable_ellipsoid(const Eigen::MatrixXd& Q);

// One step of the certified closed loop, Eq.-(22) form:
//   x+ = (A0 + Pi^T A1 + Bu (K0 + K1 Pi)) x + Bw w.
Eigen::VectorXd closed_loop_step(const PolyQuasiLpvModel& model, const GainFunction& gains,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& w);

struct IssCertificateReport {
  int decrease_violations = 0;
  double max_residual = 0.0;  // max of dV - mu (w'w - V) over samples
  int samples = 0;
  std::vector<bool> containment_ok;  // 1 - h_i' Q h_i > 0 per half-plane

  bool passed() const;
};

// Sampling certificate of the Lyapunov ISS decrease: x uniform in R
// (rejection from the bounding box), theta from the synthesis vertex set
// plus its midpoint, w uniform in the unit ball.
IssCertificateReport verify_iss_decrease(const SynthesisSolution& solution,
                                         const PolyQuasiLpvModel& model, int n_samples,
                                         uint64_t rng_seed);

}  // namespace polyiss::lmi
