#include "polyiss/lmi.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace polyiss::lmi {

std::vector<Eigen::VectorXd> SynthesisProblem::synthesis_thetas() const {
  if (fixed_theta) return {*fixed_theta};
  return model.theta_vertices;
}

void SynthesisProblem::validate() const {
  model.validate();
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("synthesis: mu must be in (0,1)");
  if (strictness_eps <= 0.0) throw std::invalid_argument("synthesis: strictness_eps must be > 0");
  if (fixed_theta && fixed_theta->size() != model.ntheta())
    throw std::invalid_argument("synthesis: fixed theta dimension mismatch");
}

Eigen::MatrixXd containment_matrix(const Eigen::MatrixXd& Q, const Eigen::VectorXd& h) {
  const int n = static_cast<int>(Q.rows());
  Eigen::MatrixXd m(n + 1, n + 1);
  m(0, 0) = 1.0;
  m.block(0, 1, 1, n) = (Q * h).transpose();
  m.block(1, 0, n, 1) = Q * h;
  m.block(1, 1, n, n) = Q;
  return m;
}

namespace {

// Dense Omega(x) = [Omega0 Omega1 0 0 0; 0 0 0 Omega0 Omega1] in the
// five-block column arrangement of the synthesis constraint.
Eigen::MatrixXd omega_arrangement(const Annihilator& ann, const Eigen::VectorXd& x, int nx,
                                  int lifted, int nw) {
  const int n2 = 2 * lifted;
  const int dim = 2 * nx + 2 * lifted + nw;
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n2, dim);
  if (lifted == 0) return omega;
  const Eigen::MatrixXd o0 = ann.omega0.at(x);
  const Eigen::MatrixXd o1 = ann.omega1.at(x);
  const int o4 = nx + lifted + nw;
  omega.block(0, 0, lifted, nx) = o0;
  omega.block(0, nx, lifted, lifted) = o1;
  omega.block(lifted, o4, lifted, nx) = o0;
  omega.block(lifted, o4 + nx, lifted, lifted) = o1;
  return omega;
}

}  // namespace

Eigen::MatrixXd synthesis_matrix(const PolyQuasiLpvModel& model, const Eigen::VectorXd& x_vertex,
                                 const Eigen::VectorXd& theta_vertex, double mu,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& G,
                                 const Eigen::MatrixXd& M0, const Eigen::MatrixXd& M1,
                                 const Eigen::MatrixXd& L) {
  const int nx = model.nx();
  const int nw = model.nw();
  const int lifted = model.basis.lifted_rows();
  const int dim = 2 * nx + 2 * lifted + nw;
  const int o3 = nx + lifted;
  const int o4 = o3 + nw;
  const int o5 = o4 + nx;

  const Eigen::MatrixXd a0 = model.A0.at(theta_vertex);
  const Eigen::MatrixXd a1 = model.A1.at(theta_vertex);
  const Eigen::MatrixXd bu = model.Bu.at(theta_vertex);
  const Eigen::MatrixXd bw = model.Bw().at(theta_vertex);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  m.block(0, 0, nx, nx) = (1.0 - mu) * (Q - G - G.transpose());
  m.block(o3, o3, nw, nw) = -mu * Eigen::MatrixXd::Identity(nw, nw);
  m.block(o4, o4, nx, nx) = -Q;

  const Eigen::MatrixXd r41 = a0 * G + bu * M0;
  m.block(o4, 0, nx, nx) = r41;
  m.block(0, o4, nx, nx) = r41.transpose();
  if (lifted > 0) {
    const Eigen::MatrixXd r42 = bu * M1;
    m.block(o4, nx, nx, lifted) = r42;
    m.block(nx, o4, lifted, nx) = r42.transpose();
    const Eigen::MatrixXd r51 = a1 * G;
    m.block(o5, 0, lifted, nx) = r51;
    m.block(0, o5, nx, lifted) = r51.transpose();
  }
  m.block(o4, o3, nx, nw) = bw;
  m.block(o3, o4, nw, nx) = bw.transpose();

  if (lifted > 0) {
    const Annihilator ann = build_annihilator(model.basis);
    const Eigen::MatrixXd omega = omega_arrangement(ann, x_vertex, nx, lifted, nw);
    m += L * omega + omega.transpose() * L.transpose();
  }
  return m;
}

namespace detail {

int VarLayout::q(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Position of (i, j), i <= j, in the stacked upper triangle.
  return i * nx - i * (i - 1) / 2 + (j - i);
}
int VarLayout::g(int i, int j) const { return nx * (nx + 1) / 2 + i * nx + j; }
int VarLayout::m0(int i, int j) const { return g(nx - 1, nx - 1) + 1 + i * nx + j; }
int VarLayout::m1(int i, int j) const { return m0(nu - 1, nx - 1) + 1 + i * lifted + j; }
int VarLayout::l(int r, int s) const {
  const int base = lifted > 0 ? m1(nu - 1, lifted - 1) + 1 : m0(nu - 1, nx - 1) + 1;
  return base + r * mult_cols + s;
}
int VarLayout::lambda() const { return l(0, 0) + block_dim * mult_cols; }
int VarLayout::count() const { return lambda() + (with_lambda ? 1 : 0); }

VarLayout VarLayout::of(const PolyQuasiLpvModel& model, bool with_lambda) {
  VarLayout v;
  v.nx = model.nx();
  v.nu = model.nu();
  v.nm = model.basis.monomial_count();
  v.nw = model.nw();
  v.lifted = v.nm * v.nx;
  v.block_dim = 2 * v.nx + 2 * v.lifted + v.nw;
  v.mult_cols = 2 * v.lifted;
  v.with_lambda = with_lambda;
  return v;
}

namespace {

sdp::ConstraintBlock negate(sdp::ConstraintBlock b) {
  b.f0 = -b.f0;
  for (auto& t : b.terms) {
    for (auto& e : t.entries) e.v = -e.v;
  }
  return b;
}

}  // namespace

sdp::Problem build_synthesis_sdp(const SynthesisProblem& problem, const VarLayout& layout) {
  const PolyQuasiLpvModel& model = problem.model;
  const double mu = problem.mu;
  const double eps = problem.strictness_eps;
  const int nx = layout.nx;
  const int nu = layout.nu;
  const int nw = layout.nw;
  const int lifted = layout.lifted;
  const int dim = layout.block_dim;
  const int o3 = nx + lifted;
  const int o4 = o3 + nw;
  const int o5 = o4 + nx;

  sdp::Problem sp;
  sp.num_vars = layout.count();
  sp.cost = Eigen::VectorXd::Zero(sp.num_vars);
  if (layout.with_lambda) sp.cost[layout.lambda()] = 1.0;

  // Containment: [1, h'Q; Qh, Q] - eps I >= 0 per half-plane.
  for (const Eigen::VectorXd& h : model.X.half_planes) {
    sdp::BlockBuilder b(1 + nx);
    b.add_const(0, 0, 1.0);
    for (int i = 0; i <= nx; ++i) b.add_const(i, i, -eps);
    for (int k = 0; k < nx; ++k) {
      for (int l = k; l < nx; ++l) {
        b.add_mirrored(layout.q(k, l), 0, 1 + k, h[l]);
        if (l != k) b.add_mirrored(layout.q(k, l), 0, 1 + l, h[k]);
        b.add_mirrored(layout.q(k, l), 1 + k, 1 + l, 1.0);
      }
    }
    sp.blocks.push_back(b.finish());
  }

  // Vertex constraints: -(M(z) + eps I) >= 0 with M the five-block matrix
  // plus the annihilator multiplier term.
  const Annihilator ann = build_annihilator(model.basis);
  const auto vertices =
      enumerate_vertices(model.X, model.basis.active_vars(), problem.synthesis_thetas(), nx);
  for (const auto& [xv, thv] : vertices) {
    const Eigen::MatrixXd a0 = model.A0.at(thv);
    const Eigen::MatrixXd a1 = model.A1.at(thv);
    const Eigen::MatrixXd bu = model.Bu.at(thv);
    const Eigen::MatrixXd bw = model.Bw().at(thv);
    const Eigen::MatrixXd omega = omega_arrangement(ann, xv, nx, lifted, nw);

    sdp::BlockBuilder b(dim);
    for (int i = 0; i < dim; ++i) b.add_const(i, i, eps);
    for (int i = 0; i < nw; ++i) b.add_const(o3 + i, o3 + i, -mu);
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < nw; ++j) b.add_const_mirrored(o4 + i, o3 + j, bw(i, j));
    }
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < nx; ++j) {
        // (1,1): (1-mu)(Q - G - G'); (4,4): -Q.
        b.add(layout.q(i, j), i, j, 1.0 - mu);
        b.add(layout.g(i, j), i, j, -(1.0 - mu));
        b.add(layout.g(j, i), i, j, -(1.0 - mu));
        b.add(layout.q(i, j), o4 + i, o4 + j, -1.0);
        // (4,1): A0 G + Bu M0.
        for (int k = 0; k < nx; ++k) b.add_mirrored(layout.g(k, j), o4 + i, j, a0(i, k));
        for (int k = 0; k < nu; ++k) b.add_mirrored(layout.m0(k, j), o4 + i, j, bu(i, k));
      }
      // (4,2): Bu M1.
      for (int j = 0; j < lifted; ++j) {
        for (int k = 0; k < nu; ++k) b.add_mirrored(layout.m1(k, j), o4 + i, nx + j, bu(i, k));
      }
    }
    // (5,1): A1 G.
    for (int i = 0; i < lifted; ++i) {
      for (int j = 0; j < nx; ++j) {
        for (int k = 0; k < nx; ++k) b.add_mirrored(layout.g(k, j), o5 + i, j, a1(i, k));
      }
    }
    // L Omega + Omega' L'.
    for (int r = 0; r < dim; ++r) {
      for (int s = 0; s < layout.mult_cols; ++s) {
        const int var = layout.l(r, s);
        for (int c = 0; c < dim; ++c) {
          if (omega(s, c) != 0.0) {
            b.add(var, r, c, omega(s, c));
            b.add(var, c, r, omega(s, c));
          }
        }
      }
    }
    sp.blocks.push_back(negate(b.finish()));
  }

  // lambda I - Q >= 0.
  if (layout.with_lambda) {
    sdp::BlockBuilder b(nx);
    for (int i = 0; i < nx; ++i) b.add(layout.lambda(), i, i, 1.0);
    for (int i = 0; i < nx; ++i) {
      for (int j = i; j < nx; ++j) b.add_mirrored(layout.q(i, j), i, j, -1.0);
    }
    sp.blocks.push_back(b.finish());
  }
  return sp;
}

}  // namespace detail

namespace {

double lambda_min(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double lambda_max(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd extract(const Eigen::VectorXd& z, int rows, int cols,
                        const std::function<int(int, int)>& idx) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = z[idx(i, j)];
  }
  return m;
}

}  // namespace

SynthesisSolution solve_synthesis(const SynthesisProblem& problem) {
  problem.validate();
  const auto layout = detail::VarLayout::of(problem.model, problem.minimize_lambda);
  const sdp::Problem sp = detail::build_synthesis_sdp(problem, layout);

  sdp::BarrierSolver backend;
  const sdp::Result r = backend.solve(sp, problem.solver_options);

  SynthesisSolution sol;
  sol.mu = problem.mu;
  sol.strictness_eps = problem.strictness_eps;
  sol.synth_theta = problem.synthesis_thetas();
  sol.solver_message = sdp::to_string(r.status) + (r.message.empty() ? "" : ": " + r.message);

  if (r.status == sdp::Status::Infeasible) {
    sol.status = SynthStatus::Infeasible;
    return sol;
  }
  if (!r.feasible()) {
    sol.status = SynthStatus::BackendFailure;
    return sol;
  }

  const Eigen::VectorXd& z = r.z;
  sol.Q = extract(z, layout.nx, layout.nx, [&](int i, int j) { return layout.q(i, j); });
  sol.G = extract(z, layout.nx, layout.nx, [&](int i, int j) { return layout.g(i, j); });
  sol.M0 = extract(z, layout.nu, layout.nx, [&](int i, int j) { return layout.m0(i, j); });
  sol.M1 = layout.lifted > 0
               ? extract(z, layout.nu, layout.lifted, [&](int i, int j) { return layout.m1(i, j); })
               : Eigen::MatrixXd::Zero(layout.nu, 0);
  sol.L = layout.mult_cols > 0
              ? extract(z, layout.block_dim, layout.mult_cols,
                        [&](int i, int j) { return layout.l(i, j); })
              : Eigen::MatrixXd::Zero(layout.block_dim, 0);

  // Post-hoc certificate re-check from the literal matrices; the backend's
  // own report is not trusted.
  sol.margin_containment = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& h : problem.model.X.half_planes) {
    sol.margin_containment =
        std::min(sol.margin_containment, lambda_min(containment_matrix(sol.Q, h)));
  }
  if (problem.model.X.half_planes.empty()) sol.margin_containment = 0.0;

  sol.margin_synthesis = std::numeric_limits<double>::infinity();
  const auto vertices = enumerate_vertices(problem.model.X, problem.model.basis.active_vars(),
                                           problem.synthesis_thetas(), layout.nx);
  for (const auto& [xv, thv] : vertices) {
    const Eigen::MatrixXd m =
        synthesis_matrix(problem.model, xv, thv, problem.mu, sol.Q, sol.G, sol.M0, sol.M1, sol.L);
    sol.margin_synthesis = std::min(sol.margin_synthesis, -lambda_max(m));
  }

  const double eps = problem.strictness_eps;
  const bool margins_ok = sol.margin_containment >= 0.0 && sol.margin_synthesis >= 0.999 * eps &&
                          lambda_min(sol.Q) > 0.0 &&
                          lambda_min(sol.G + sol.G.transpose() - sol.Q) > 0.0;
  if (!margins_ok) {
    sol.status = SynthStatus::BackendFailure;
    sol.solver_message += " (post-hoc margin re-check failed)";
    return sol;
  }

  const GainFunction gains = recover_gains(sol.M0, sol.M1, sol.G, problem.model.basis);
  sol.K0 = gains.K0;
  sol.K1 = gains.K1;
  sol.lambda = problem.minimize_lambda ? z[layout.lambda()] : lambda_max(sol.Q);
  sol.status = SynthStatus::Optimal;
  return sol;
}

std::vector<double> default_mu_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  return grid;
}

LineSearchResult line_search_mu(const SynthesisProblem& problem_template,
                                const std::vector<double>& grid, int refine_iters) {
  if (grid.empty()) throw std::invalid_argument("line_search_mu: empty grid");
  LineSearchResult out;
  bool have_best = false;

  auto lambda_at = [&](double mu) -> double {
    SynthesisProblem p = problem_template;
    p.mu = mu;
    p.minimize_lambda = true;
    SynthesisSolution s = solve_synthesis(p);
    out.sweep.push_back({mu, s.feasible(), s.feasible() ? s.lambda : 0.0});
    const double lam = s.feasible() ? s.lambda : std::numeric_limits<double>::infinity();
    if (s.feasible() && (!have_best || s.lambda < out.best.lambda)) {
      out.best = std::move(s);
      have_best = true;
    }
    return lam;
  };

  for (double mu : grid) {
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("line_search_mu: mu outside (0,1)");
    lambda_at(mu);
  }
  if (!have_best) throw AllInfeasibleError();

  if (refine_iters > 0) {
    // Golden-section refinement in the bracket around the best grid point.
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    const double best_mu = out.best.mu;
    auto it = std::lower_bound(sorted.begin(), sorted.end(), best_mu);
    double lo = it == sorted.begin() ? std::max(1e-3, best_mu / 2.0) : *(it - 1);
    double hi = (it + 1) == sorted.end() ? std::min(1.0 - 1e-3, (1.0 + best_mu) / 2.0) : *(it + 1);
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
    double fa = lambda_at(a), fb = lambda_at(b);
    for (int i = 0; i < refine_iters; ++i) {
      if (fa <= fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - inv_phi * (hi - lo);
        fa = lambda_at(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + inv_phi * (hi - lo);
        fb = lambda_at(b);
      }
    }
  }
  return out;
}

Eigen::MatrixXd GainFunction::K_at(const Eigen::VectorXd& x) const {
  if (K1.cols() == 0) return K0;
  return K0 + K1 * eval_pi(basis, x);
}

Eigen::VectorXd GainFunction::u1(const Eigen::VectorXd& x) const { return K_at(x) * x; }

GainFunction recover_gains(const Eigen::MatrixXd& M0, const Eigen::MatrixXd& M1,
                           const Eigen::MatrixXd& G, const MonomialBasis& basis) {
  const int nx = static_cast<int>(G.rows());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible()) throw std::runtime_error("recover_gains: G is singular");
  const Eigen::MatrixXd g_inv = lu.inverse();

  GainFunction gains;
  gains.basis = basis;
  gains.K0 = M0 * g_inv;
  // Ga = diag{G,...,G}: apply G^{-1} per column block.
  gains.K1.resize(M0.rows(), M1.cols());
  for (int j = 0; j * nx < M1.cols(); ++j) {
    gains.K1.middleCols(j * nx, nx) = M1.middleCols(j * nx, nx) * g_inv;
  }
  return gains;
}

Eigen::VectorXd Ellipsoid::bounding_box(const Eigen::MatrixXd& Q) const {
  return Q.diagonal().cwiseSqrt();
}

Ellipsoid reachable_ellipsoid(const Eigen::MatrixXd& Q) {
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("reachable_ellipsoid: Q is not positive definite");
  Ellipsoid e;
  const Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
  e.P = 0.5 * (p + p.transpose());
  return e;
}

Eigen::VectorXd closed_loop_step(const PolyQuasiLpvModel& model, const GainFunction& gains,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& w) {
  return model.A_at(x, theta) * x + model.Bu.at(theta) * gains.u1(x) + model.Bw().at(theta) * w;
}

bool IssCertificateReport::passed() const {
  if (decrease_violations != 0) return false;
  return std::all_of(containment_ok.begin(), containment_ok.end(), [](bool b) { return b; });
}

IssCertificateReport verify_iss_decrease(const SynthesisSolution& solution,
                                         const PolyQuasiLpvModel& model, int n_samples,
                                         uint64_t rng_seed) {
  if (!solution.feasible()) throw std::invalid_argument("verify_iss_decrease: solution not feasible");
  const int nx = model.nx();
  const int nw = model.nw();
  const Ellipsoid ell = reachable_ellipsoid(solution.Q);
  const Eigen::VectorXd box = ell.bounding_box(solution.Q);
  const GainFunction gains{solution.K0, solution.K1, model.basis};

  // Theta samples: synthesis vertices plus their midpoint.
  std::vector<Eigen::VectorXd> thetas = solution.synth_theta;
  if (!thetas.empty()) {
    Eigen::VectorXd mid = Eigen::VectorXd::Zero(thetas.front().size());
    for (const auto& t : thetas) mid += t;
    mid /= static_cast<double>(thetas.size());
    const bool dup = std::any_of(thetas.begin(), thetas.end(),
                                 [&](const Eigen::VectorXd& t) { return t.isApprox(mid); });
    if (!dup) thetas.push_back(mid);
  }

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  IssCertificateReport report;
  report.samples = n_samples;
  const double mu = solution.mu;
  report.max_residual = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < n_samples; ++s) {
    // x uniform in R via rejection from the bounding box.
    Eigen::VectorXd x(nx);
    int guard = 0;
    do {
      for (int i = 0; i < nx; ++i) x[i] = box[i] * unit(rng);
      if (++guard > 100000) throw std::runtime_error("verify_iss_decrease: rejection stalled");
    } while (!ell.contains(x));

    // w uniform in the unit ball.
    Eigen::VectorXd w(nw);
    for (int i = 0; i < nw; ++i) w[i] = gauss(rng);
    const double norm = w.norm();
    if (norm > 0.0) w *= std::pow(u01(rng), 1.0 / nw) / norm;

    const Eigen::VectorXd& theta = thetas[s % thetas.size()];
    const Eigen::VectorXd xp = closed_loop_step(model, gains, x, theta, w);

    const double v = ell.quadform(x);
    const double vp = ell.quadform(xp);
    const double residual = (vp - v) - mu * (w.squaredNorm() - v);
    report.max_residual = std::max(report.max_residual, residual);
    if (residual > 1e-9) ++report.decrease_violations;
  }

  for (const Eigen::VectorXd& h : model.X.half_planes) {
    report.containment_ok.push_back(1.0 - h.dot(solution.Q * h) > 0.0);
  }
  return report;
}

}  // namespace polyiss::lmi
