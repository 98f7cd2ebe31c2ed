#pragma once

// Uncertain polynomial discrete-time plants in the lifted quasi-LPV form
//
//   x+ = A(x,theta) x + Bu(theta) (u1 + u2) + Bd(theta) d,   y = C x
//   A(x,theta) = A0(theta) + Pi(x)^T A1(theta)
//
// where Pi(x) stacks m^(l)(x) (x) I_{n_x} for monomial degree blocks
// l = 1..q. Also provides a left annihilator (Omega0, Omega1) of Pi with
// constant-determinant Omega1, polynomial-to-lifted decomposition, the
// normalized joint input matrix Bw, and vertex enumeration of X x Theta.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace polyiss {

// Ordered monomial exponent table: degree blocks l = 1..q, graded
// lexicographic (lex-descending exponent vectors) inside each block.
// Exponent vectors span all n_x states; only indices in active_vars may
// carry nonzero exponents.
class MonomialBasis {
 public:
  MonomialBasis() = default;

  // All monomials of degree 1..q over the given active variables.
  static MonomialBasis full(int n_x, int q, std::vector<int> active_vars);

  int n_x() const { return n_x_; }
  int max_degree() const { return q_; }
  const std::vector<int>& active_vars() const { return active_vars_; }

  // n_m = n_1 + ... + n_q
  int monomial_count() const { return static_cast<int>(exponents_.size()); }
  int lifted_rows() const { return monomial_count() * n_x_; }

  // Flat indexing across degree blocks.
  const Eigen::VectorXi& exponent(int flat) const { return exponents_.at(flat); }
  int degree(int flat) const { return exponents_.at(flat).sum(); }
  // -1 when the monomial is not in the basis.
  int index_of(const Eigen::VectorXi& expo) const;
  double eval_monomial(int flat, const Eigen::VectorXd& x) const;

  int block_size(int degree) const;  // n_l

 private:
  int n_x_ = 0;
  int q_ = 0;
  std::vector<int> active_vars_;
  std::vector<Eigen::VectorXi> exponents_;
};

// Lifted matrix Pi(x): vertical stack of m_j(x) * I_{n_x}, one block per
// basis monomial; shape (n_m n_x) x n_x.
Eigen::MatrixXd eval_pi(const MonomialBasis& basis, const Eigen::VectorXd& x);

// Matrix affine in the state: M(x) = constant + sum_j x_j * linear[j].
struct AffineStateMatrix {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> linear;  // one (possibly zero) matrix per state

  Eigen::MatrixXd at(const Eigen::VectorXd& x) const;
};

// Left annihilator of the lifting: Omega0(x) + Omega1(x) Pi(x) = 0 with
// det Omega1(x) = (-1)^(n_m n_x) for all x.
struct Annihilator {
  AffineStateMatrix omega0;  // (n_m n_x) x n_x
  AffineStateMatrix omega1;  // (n_m n_x) x (n_m n_x)
};

// Chain construction: the degree-l block row of each monomial m = x_v * m'
// (v the lexicographically-first variable factor) carries x_v * I in the
// column block of m' and -I on its own diagonal; degree-1 rows put x_v * I
// into Omega0 directly. Omega1 is block lower-triangular with -I diagonal,
// so its determinant is constant.
Annihilator build_annihilator(const MonomialBasis& basis);

// Matrix affine in theta: M(theta) = constant + sum_j theta_j * coeff[j].
struct AffineThetaMatrix {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> theta;  // one matrix per uncertain parameter

  Eigen::MatrixXd at(const Eigen::VectorXd& th) const;
  int rows() const { return static_cast<int>(constant.rows()); }
  int cols() const { return static_cast<int>(constant.cols()); }

  static AffineThetaMatrix zero(int rows, int cols, int n_theta);
};

// One polynomial term of an entry of A(x,theta): coeff * theta_t * x^expo
// at (row, col); theta_index = -1 for theta-free terms.
struct PolyTerm {
  int row = 0;
  int col = 0;
  Eigen::VectorXi exponents;  // size n_x; empty means all-zero
  int theta_index = -1;
  double coeff = 0.0;
};

// Splits polynomial entries of A(x,theta) into the lifted pair so that
// A0(theta) + Pi(x)^T A1(theta) reproduces the input exactly. Throws on
// monomials outside the basis or theta indices out of range.
void decompose_dynamics(const std::vector<PolyTerm>& terms, const MonomialBasis& basis,
                        int n_theta, AffineThetaMatrix* a0, AffineThetaMatrix* a1);

// Bw(theta) = [eta_u * Bu(theta), eta_d * Bd(theta)]; the normalized joint
// input w = [u2/eta_u; d/eta_d] then satisfies w^T w <= 1 on U x D.
AffineThetaMatrix build_bw(const AffineThetaMatrix& bu, const AffineThetaMatrix& bd,
                           double eta_u, double eta_d);

// State domain X = {x : h_i^T x <= 1}. Vertex enumeration ranges over the
// active variables only; every active variable must have finite bounds
// realized by a pair of axis-aligned half-planes.
struct StateDomain {
  std::vector<Eigen::VectorXd> half_planes;

  // Explicit vertex coordinates for the active variables (inactive
  // coordinates of a vertex are pinned to 0).
  std::vector<Eigen::VectorXd> vertex_grid(const std::vector<int>& active_vars) const;
  // [lower, upper] for one variable, derived from axis-aligned half-planes.
  std::pair<double, double> bounds_of(int var) const;
};

struct PolyQuasiLpvModel {
  MonomialBasis basis;
  AffineThetaMatrix A0;  // n_x x n_x
  AffineThetaMatrix A1;  // (n_m n_x) x n_x
  AffineThetaMatrix Bu;  // n_x x n_u
  AffineThetaMatrix Bd;  // n_x x n_d
  Eigen::MatrixXd C;
  StateDomain X;
  std::vector<Eigen::VectorXd> theta_vertices;
  double eta_u = 1.0;
  double eta_d = 1.0;

  int nx() const { return A0.rows(); }
  int nu() const { return Bu.cols(); }
  int nd() const { return Bd.cols(); }
  int nw() const { return nu() + nd(); }
  int ntheta() const { return static_cast<int>(theta_vertices.empty() ? 0 : theta_vertices.front().size()); }

  AffineThetaMatrix Bw() const { return build_bw(Bu, Bd, eta_u, eta_d); }
  // A(x,theta) reassembled from the lifted pair.
  Eigen::MatrixXd A_at(const Eigen::VectorXd& x, const Eigen::VectorXd& th) const;

  void validate() const;  // dimension and assumption (A1-A4) checks
};

// Cartesian product of the active-variable vertex grid with the Theta
// vertex list; inactive state coordinates are 0 in every vertex.
std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> enumerate_vertices(
    const StateDomain& domain, const std::vector<int>& active_vars,
    const std::vector<Eigen::VectorXd>& theta_vertices, int n_x);

// Discrete-time Euler model of the Van der Pol oscillator with an added
// integrator state, |x1| <= 2, theta in [theta_lo, theta_hi].
PolyQuasiLpvModel make_vdp_model(double ts, double theta_lo = 0.5, double theta_hi = 0.9,
                                 double eta_u = 1.0, double eta_d = 1.0);

}  // namespace polyiss
