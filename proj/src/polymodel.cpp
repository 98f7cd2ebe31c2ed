#include "polyiss/polymodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace polyiss {

namespace {

// Lexicographic descending order on exponent vectors; within a fixed total
// degree this is graded lex (x1^2 before x1*x2 before x2^2).
bool lex_greater(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

void gen_degree_block(const std::vector<int>& active, int n_x, int degree,
                      std::vector<Eigen::VectorXi>* out) {
  std::vector<Eigen::VectorXi> block;
  // Distribute `degree` over the active variables.
  std::vector<int> expo(active.size(), 0);
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == static_cast<int>(active.size()) - 1) {
      expo[pos] = remaining;
      Eigen::VectorXi full = Eigen::VectorXi::Zero(n_x);
      for (size_t j = 0; j < active.size(); ++j) full[active[j]] = expo[j];
      block.push_back(full);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      expo[pos] = k;
      rec(pos + 1, remaining - k);
    }
  };
  if (!active.empty() && degree >= 1) rec(0, degree);
  std::sort(block.begin(), block.end(), lex_greater);
  out->insert(out->end(), block.begin(), block.end());
}

std::vector<int> key_of(const Eigen::VectorXi& e) {
  return std::vector<int>(e.data(), e.data() + e.size());
}

}  // namespace

MonomialBasis MonomialBasis::full(int n_x, int q, std::vector<int> active_vars) {
  if (n_x < 1) throw std::invalid_argument("MonomialBasis: n_x must be >= 1");
  if (q < 0) throw std::invalid_argument("MonomialBasis: q must be >= 0");
  std::sort(active_vars.begin(), active_vars.end());
  active_vars.erase(std::unique(active_vars.begin(), active_vars.end()), active_vars.end());
  for (int v : active_vars) {
    if (v < 0 || v >= n_x) throw std::invalid_argument("MonomialBasis: active var out of range");
  }
  if (q >= 1 && active_vars.empty())
    throw std::invalid_argument("MonomialBasis: q >= 1 requires at least one active variable");

  MonomialBasis b;
  b.n_x_ = n_x;
  b.q_ = q;
  b.active_vars_ = active_vars;
  for (int l = 1; l <= q; ++l) gen_degree_block(active_vars, n_x, l, &b.exponents_);
  return b;
}

int MonomialBasis::index_of(const Eigen::VectorXi& expo) const {
  for (int j = 0; j < monomial_count(); ++j) {
    if (exponents_[j] == expo) return j;
  }
  return -1;
}

double MonomialBasis::eval_monomial(int flat, const Eigen::VectorXd& x) const {
  const Eigen::VectorXi& e = exponents_.at(flat);
  double v = 1.0;
  for (int i = 0; i < n_x_; ++i) {
    for (int k = 0; k < e[i]; ++k) v *= x[i];
  }
  return v;
}

int MonomialBasis::block_size(int degree) const {
  int count = 0;
  for (const auto& e : exponents_) {
    if (e.sum() == degree) ++count;
  }
  return count;
}

Eigen::MatrixXd eval_pi(const MonomialBasis& basis, const Eigen::VectorXd& x) {
  if (x.size() != basis.n_x()) throw std::invalid_argument("eval_pi: x dimension mismatch");
  const int nx = basis.n_x();
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(basis.lifted_rows(), nx);
  for (int j = 0; j < basis.monomial_count(); ++j) {
    pi.block(j * nx, 0, nx, nx) = basis.eval_monomial(j, x) * Eigen::MatrixXd::Identity(nx, nx);
  }
  return pi;
}

Eigen::MatrixXd AffineStateMatrix::at(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd m = constant;
  for (int j = 0; j < static_cast<int>(linear.size()); ++j) {
    if (linear[j].size() != 0) m += x[j] * linear[j];
  }
  return m;
}

Annihilator build_annihilator(const MonomialBasis& basis) {
  const int nx = basis.n_x();
  const int nm = basis.monomial_count();
  const int rows = nm * nx;

  Annihilator a;
  a.omega0.constant = Eigen::MatrixXd::Zero(rows, nx);
  a.omega0.linear.assign(nx, Eigen::MatrixXd());
  a.omega1.constant = Eigen::MatrixXd::Zero(rows, rows);
  a.omega1.linear.assign(nx, Eigen::MatrixXd());

  auto lin0 = [&](int v) -> Eigen::MatrixXd& {
    if (a.omega0.linear[v].size() == 0) a.omega0.linear[v] = Eigen::MatrixXd::Zero(rows, nx);
    return a.omega0.linear[v];
  };
  auto lin1 = [&](int v) -> Eigen::MatrixXd& {
    if (a.omega1.linear[v].size() == 0) a.omega1.linear[v] = Eigen::MatrixXd::Zero(rows, rows);
    return a.omega1.linear[v];
  };

  for (int j = 0; j < nm; ++j) {
    const Eigen::VectorXi& e = basis.exponent(j);
    // First variable factor of the monomial.
    int v = 0;
    while (e[v] == 0) ++v;
    a.omega1.constant.block(j * nx, j * nx, nx, nx) = -Eigen::MatrixXd::Identity(nx, nx);
    if (e.sum() == 1) {
      lin0(v).block(j * nx, 0, nx, nx) = Eigen::MatrixXd::Identity(nx, nx);
    } else {
      Eigen::VectorXi rest = e;
      rest[v] -= 1;
      const int jp = basis.index_of(rest);
      if (jp < 0) throw std::logic_error("build_annihilator: basis is not factor-closed");
      lin1(v).block(j * nx, jp * nx, nx, nx) = Eigen::MatrixXd::Identity(nx, nx);
    }
  }
  return a;
}

Eigen::MatrixXd AffineThetaMatrix::at(const Eigen::VectorXd& th) const {
  Eigen::MatrixXd m = constant;
  if (th.size() != static_cast<Eigen::Index>(theta.size()))
    throw std::invalid_argument("AffineThetaMatrix: theta dimension mismatch");
  for (int j = 0; j < static_cast<int>(theta.size()); ++j) {
    if (theta[j].size() != 0) m += th[j] * theta[j];
  }
  return m;
}

AffineThetaMatrix AffineThetaMatrix::zero(int rows, int cols, int n_theta) {
  AffineThetaMatrix m;
  m.constant = Eigen::MatrixXd::Zero(rows, cols);
  m.theta.assign(n_theta, Eigen::MatrixXd::Zero(rows, cols));
  return m;
}

void decompose_dynamics(const std::vector<PolyTerm>& terms, const MonomialBasis& basis,
                        int n_theta, AffineThetaMatrix* a0, AffineThetaMatrix* a1) {
  const int nx = basis.n_x();
  *a0 = AffineThetaMatrix::zero(nx, nx, n_theta);
  *a1 = AffineThetaMatrix::zero(basis.lifted_rows(), nx, n_theta);

  for (const PolyTerm& t : terms) {
    if (t.row < 0 || t.row >= nx || t.col < 0 || t.col >= nx)
      throw std::invalid_argument("decompose_dynamics: entry index out of range");
    if (t.theta_index >= n_theta)
      throw std::invalid_argument("decompose_dynamics: theta index out of range");
    Eigen::VectorXi e = t.exponents.size() == 0 ? Eigen::VectorXi::Zero(nx) : t.exponents;
    if (e.size() != nx) throw std::invalid_argument("decompose_dynamics: exponent vector size");
    if (e.minCoeff() < 0) throw std::invalid_argument("decompose_dynamics: negative exponent");

    if (e.sum() == 0) {
      Eigen::MatrixXd& dst = t.theta_index < 0 ? a0->constant : a0->theta[t.theta_index];
      dst(t.row, t.col) += t.coeff;
      continue;
    }
    const int j = basis.index_of(e);
    if (j < 0)
      throw std::invalid_argument(
          "decompose_dynamics: monomial of degree " + std::to_string(e.sum()) +
          " not representable in the basis (degree overflow or inactive variable)");
    // Pi(x)^T A1 = sum_j m_j(x) * A1_block_j, so the coefficient of
    // m_j(x) at entry (row, col) lands in block j at the same position.
    Eigen::MatrixXd& dst = t.theta_index < 0 ? a1->constant : a1->theta[t.theta_index];
    dst(j * nx + t.row, t.col) += t.coeff;
  }
}

AffineThetaMatrix build_bw(const AffineThetaMatrix& bu, const AffineThetaMatrix& bd,
                           double eta_u, double eta_d) {
  if (eta_u <= 0.0 || eta_d <= 0.0) throw std::invalid_argument("build_bw: eta must be positive");
  if (bu.rows() != bd.rows()) throw std::invalid_argument("build_bw: row mismatch");
  if (bu.theta.size() != bd.theta.size()) throw std::invalid_argument("build_bw: n_theta mismatch");

  const int nw = bu.cols() + bd.cols();
  AffineThetaMatrix bw = AffineThetaMatrix::zero(bu.rows(), nw, static_cast<int>(bu.theta.size()));
  bw.constant << eta_u * bu.constant, eta_d * bd.constant;
  for (size_t j = 0; j < bw.theta.size(); ++j) {
    bw.theta[j] << eta_u * bu.theta[j], eta_d * bd.theta[j];
  }
  return bw;
}

std::pair<double, double> StateDomain::bounds_of(int var) const {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& h : half_planes) {
    bool axis = true;
    for (int j = 0; j < h.size(); ++j) {
      if (j != var && h[j] != 0.0) {
        axis = false;
        break;
      }
    }
    if (!axis || h[var] == 0.0) continue;
    if (h[var] > 0.0)
      hi = std::min(hi, 1.0 / h[var]);
    else
      lo = std::max(lo, 1.0 / h[var]);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("StateDomain: active variable " + std::to_string(var) +
                                " has an unbounded range");
  return {lo, hi};
}

std::vector<Eigen::VectorXd> StateDomain::vertex_grid(const std::vector<int>& active_vars) const {
  std::vector<std::pair<double, double>> bounds;
  bounds.reserve(active_vars.size());
  for (int v : active_vars) bounds.push_back(bounds_of(v));

  const size_t n = active_vars.size();
  std::vector<Eigen::VectorXd> grid;
  const size_t combos = size_t{1} << n;
  grid.reserve(combos);
  for (size_t mask = 0; mask < combos; ++mask) {
    Eigen::VectorXd v(n);
    for (size_t j = 0; j < n; ++j) v[j] = (mask >> j) & 1 ? bounds[j].second : bounds[j].first;
    grid.push_back(v);
  }
  return grid;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> enumerate_vertices(
    const StateDomain& domain, const std::vector<int>& active_vars,
    const std::vector<Eigen::VectorXd>& theta_vertices, int n_x) {
  if (theta_vertices.empty())
    throw std::invalid_argument("enumerate_vertices: Theta vertex list is empty");
  const auto grid = domain.vertex_grid(active_vars);

  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
  out.reserve(grid.size() * theta_vertices.size());
  for (const Eigen::VectorXd& g : grid) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_x);
    for (size_t j = 0; j < active_vars.size(); ++j) x[active_vars[j]] = g[j];
    for (const Eigen::VectorXd& th : theta_vertices) out.emplace_back(x, th);
  }
  return out;
}

Eigen::MatrixXd PolyQuasiLpvModel::A_at(const Eigen::VectorXd& x, const Eigen::VectorXd& th) const {
  return A0.at(th) + eval_pi(basis, x).transpose() * A1.at(th);
}

void PolyQuasiLpvModel::validate() const {
  const int n = nx();
  if (A0.rows() != n || A0.cols() != n) throw std::invalid_argument("model: A0 must be n_x x n_x");
  if (basis.n_x() != n) throw std::invalid_argument("model: basis dimension mismatch");
  if (A1.rows() != basis.lifted_rows() || A1.cols() != n)
    throw std::invalid_argument("model: A1 must be (n_m n_x) x n_x");
  if (Bu.rows() != n || Bd.rows() != n) throw std::invalid_argument("model: Bu/Bd row mismatch");
  if (C.cols() != n) throw std::invalid_argument("model: C column mismatch");
  if (eta_u <= 0.0 || eta_d <= 0.0) throw std::invalid_argument("model: eta_u, eta_d must be positive");
  if (theta_vertices.empty()) throw std::invalid_argument("model: Theta needs at least one vertex");
  const int nt = ntheta();
  for (const auto& th : theta_vertices) {
    if (th.size() != nt) throw std::invalid_argument("model: inconsistent Theta vertex dimension");
  }
  for (const auto& m : {&A0, &A1, &Bu, &Bd}) {
    if (static_cast<int>(m->theta.size()) != nt)
      throw std::invalid_argument("model: affine-theta coefficient count mismatch");
  }
  for (const auto& h : X.half_planes) {
    if (h.size() != n) throw std::invalid_argument("model: half-plane dimension mismatch");
  }
}

PolyQuasiLpvModel make_vdp_model(double ts, double theta_lo, double theta_hi, double eta_u,
                                 double eta_d) {
  if (ts <= 0.0) throw std::invalid_argument("make_vdp_model: Ts must be positive");
  const int nx = 3;
  PolyQuasiLpvModel m;
  m.basis = MonomialBasis::full(nx, 2, {0});

  // Euler discretization of the Van der Pol + integrator dynamics:
  //   A(x,theta) = [1, Ts, 0; -Ts, 1 - Ts*theta*(x1^2 - 1), 0; Ts, 0, 1]
  auto expo = [nx](int v, int p) {
    Eigen::VectorXi e = Eigen::VectorXi::Zero(nx);
    e[v] = p;
    return e;
  };
  std::vector<PolyTerm> terms = {
      {0, 0, {}, -1, 1.0},
      {0, 1, {}, -1, ts},
      {1, 0, {}, -1, -ts},
      {1, 1, {}, -1, 1.0},
      {1, 1, {}, 0, ts},
      {1, 1, expo(0, 2), 0, -ts},
      {2, 0, {}, -1, ts},
      {2, 2, {}, -1, 1.0},
  };
  decompose_dynamics(terms, m.basis, 1, &m.A0, &m.A1);

  m.Bu = AffineThetaMatrix::zero(nx, 1, 1);
  m.Bu.constant(1, 0) = ts;
  m.Bd = AffineThetaMatrix::zero(nx, 1, 1);
  m.Bd.constant(1, 0) = ts;
  m.C = Eigen::MatrixXd::Zero(1, nx);
  m.C(0, 0) = 1.0;

  m.X.half_planes = {Eigen::Vector3d(0.5, 0.0, 0.0), Eigen::Vector3d(-0.5, 0.0, 0.0)};
  m.theta_vertices = {Eigen::VectorXd::Constant(1, theta_lo),
                      Eigen::VectorXd::Constant(1, theta_hi)};
  m.eta_u = eta_u;
  m.eta_d = eta_d;
  m.validate();
  return m;
}

}  // namespace polyiss
