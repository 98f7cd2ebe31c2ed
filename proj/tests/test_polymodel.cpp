#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "polyiss/polymodel.hpp"

#include <cmath>
#include <random>

using namespace polyiss;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

// Independent brute-force lifting: enumerate exponent tuples per degree
// without going through MonomialBasis internals.
std::vector<std::vector<int>> brute_monomials(const std::vector<int>& active, int n_x, int degree) {
  std::vector<std::vector<int>> all;
  std::vector<int> expo(n_x, 0);
  std::function<void(size_t, int)> rec = [&](size_t pos, int rem) {
    if (pos + 1 == active.size()) {
      expo[active[pos]] = rem;
      all.push_back(expo);
      expo[active[pos]] = 0;
      return;
    }
    for (int k = rem; k >= 0; --k) {
      expo[active[pos]] = k;
      rec(pos + 1, rem - k);
      expo[active[pos]] = 0;
    }
  };
  if (!active.empty()) rec(0, degree);
  // Graded-lex: lex-descending within the block.
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a > b; });
  return all;
}

double eval_expo(const std::vector<int>& e, const VectorXd& x) {
  double v = 1.0;
  for (size_t i = 0; i < e.size(); ++i) v *= std::pow(x[i], e[i]);
  return v;
}

VectorXi expo(int n_x, std::initializer_list<std::pair<int, int>> powers) {
  VectorXi e = VectorXi::Zero(n_x);
  for (auto [v, p] : powers) e[v] = p;
  return e;
}

}  // namespace

TEST_CASE("basis ordering and counts match brute-force enumeration") {
  for (int n_x = 1; n_x <= 4; ++n_x) {
    for (int q = 1; q <= 3; ++q) {
      std::vector<int> active;
      for (int v = 0; v < n_x; ++v) active.push_back(v);
      const auto basis = MonomialBasis::full(n_x, q, active);

      int flat = 0;
      int expected_nm = 0;
      for (int l = 1; l <= q; ++l) {
        const auto block = brute_monomials(active, n_x, l);
        expected_nm += static_cast<int>(block.size());
        CHECK(basis.block_size(l) == static_cast<int>(block.size()));
        for (const auto& e : block) {
          const VectorXi be = basis.exponent(flat++);
          for (int i = 0; i < n_x; ++i) CHECK(be[i] == e[i]);
        }
      }
      CHECK(basis.monomial_count() == expected_nm);
      CHECK(basis.lifted_rows() == expected_nm * n_x);
    }
  }
}

TEST_CASE("eval_pi matches the section-V structure") {
  const auto basis = MonomialBasis::full(3, 2, {0});

  SUBCASE("zero state gives the zero lifting") {
    CHECK(eval_pi(basis, Eigen::Vector3d::Zero()).isZero(0.0));
    CHECK(eval_pi(basis, Eigen::Vector3d::Zero()).rows() == 6);
  }
  SUBCASE("x = (2, 5, -1) stacks 2*I3 over 4*I3") {
    const MatrixXd pi = eval_pi(basis, Eigen::Vector3d(2, 5, -1));
    MatrixXd expected(6, 3);
    expected << 2 * MatrixXd::Identity(3, 3), 4 * MatrixXd::Identity(3, 3);
    CHECK((pi - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("eval_pi full degree-2 basis over two states against brute-force oracle") {
  const auto basis = MonomialBasis::full(2, 2, {0, 1});
  const VectorXd x = Eigen::Vector2d(1, 2);
  const MatrixXd pi = eval_pi(basis, x);

  std::vector<double> values;
  for (int l = 1; l <= 2; ++l) {
    for (const auto& e : brute_monomials({0, 1}, 2, l)) values.push_back(eval_expo(e, x));
  }
  // (x1, x2) = (1, 2) then (x1^2, x1 x2, x2^2) = (1, 2, 4).
  REQUIRE(values.size() == 5);
  CHECK(values[0] == 1.0);
  CHECK(values[1] == 2.0);
  CHECK(values[2] == 1.0);
  CHECK(values[3] == 2.0);
  CHECK(values[4] == 4.0);
  REQUIRE(pi.rows() == 10);
  for (int j = 0; j < 5; ++j) {
    CHECK((pi.block(2 * j, 0, 2, 2) - values[j] * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("eval_pi rejects dimension mismatch") {
  const auto basis = MonomialBasis::full(3, 2, {0});
  CHECK_THROWS_AS(eval_pi(basis, Eigen::Vector2d(1, 2)), std::invalid_argument);
}

TEST_CASE("annihilator reproduces the section-V instance") {
  const auto basis = MonomialBasis::full(3, 2, {0});
  const auto ann = build_annihilator(basis);
  const double x1 = 1.7;
  const VectorXd x = Eigen::Vector3d(x1, -0.3, 2.0);

  MatrixXd omega0(6, 3), omega1(6, 6);
  omega0 << x1 * MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3);
  omega1 << -MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3), x1 * MatrixXd::Identity(3, 3),
      -MatrixXd::Identity(3, 3);
  CHECK((ann.omega0.at(x) - omega0).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((ann.omega1.at(x) - omega1).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("annihilator at the origin is block -I with determinant (-1)^(nm nx)") {
  const auto basis = MonomialBasis::full(2, 2, {0, 1});
  const auto ann = build_annihilator(basis);
  const VectorXd zero = VectorXd::Zero(2);
  CHECK(ann.omega0.at(zero).isZero(0.0));
  const MatrixXd o1 = ann.omega1.at(zero);
  CHECK((o1 + MatrixXd::Identity(o1.rows(), o1.cols())).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  const int dim = basis.lifted_rows();
  CHECK(o1.determinant() == doctest::Approx(dim % 2 == 0 ? 1.0 : -1.0));
}

TEST_CASE("annihilation identity and constant determinant over random bases and states") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);

  for (int n_x = 1; n_x <= 4; ++n_x) {
    for (int q = 1; q <= 3; ++q) {
      std::vector<int> active;
      for (int v = 0; v < n_x; ++v) active.push_back(v);
      const auto basis = MonomialBasis::full(n_x, q, active);
      const auto ann = build_annihilator(basis);

      double det_ref = 0.0;
      for (int trial = 0; trial < 100; ++trial) {
        VectorXd x(n_x);
        for (int i = 0; i < n_x; ++i) x[i] = unif(rng);
        const MatrixXd residual = ann.omega0.at(x) + ann.omega1.at(x) * eval_pi(basis, x);
        CHECK(residual.cwiseAbs().maxCoeff() < 1e-12);
        if (trial < 20) {
          const double det = ann.omega1.at(x).determinant();
          if (trial == 0)
            det_ref = det;
          else
            CHECK(det == doctest::Approx(det_ref).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("annihilator on a partial active set") {
  const auto basis = MonomialBasis::full(4, 2, {1, 3});
  const auto ann = build_annihilator(basis);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = unif(rng);
    const MatrixXd residual = ann.omega0.at(x) + ann.omega1.at(x) * eval_pi(basis, x);
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("decompose_dynamics reproduces the Van der Pol lifted pair") {
  const double ts = 0.1;
  const auto model = make_vdp_model(ts);
  const VectorXd theta = VectorXd::Constant(1, 0.75);

  MatrixXd a0_expected(3, 3);
  a0_expected << 1, ts, 0, -ts, ts * 0.75 + 1, 0, ts, 0, 1;
  CHECK((model.A0.at(theta) - a0_expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  // Single nonzero entry -Ts*theta in the x1^2 block, row of state x2.
  const MatrixXd a1 = model.A1.at(theta);
  REQUIRE(a1.rows() == 6);
  CHECK(a1(4, 1) == doctest::Approx(-ts * 0.75));
  MatrixXd rest = a1;
  rest(4, 1) = 0.0;
  CHECK(rest.isZero(0.0));
}

TEST_CASE("decompose_dynamics of a constant matrix leaves A1 zero") {
  const auto basis = MonomialBasis::full(2, 2, {0, 1});
  std::vector<PolyTerm> terms = {{0, 0, {}, -1, 2.0}, {1, 0, {}, -1, -1.0}};
  AffineThetaMatrix a0, a1;
  decompose_dynamics(terms, basis, 0, &a0, &a1);
  CHECK(a1.constant.isZero(0.0));
  CHECK(a0.constant(0, 0) == 2.0);
  CHECK(a0.constant(1, 0) == -1.0);
}

TEST_CASE("decompose_dynamics reconstruction on random degree-2 polynomial matrices") {
  const int n_x = 2;
  const auto basis = MonomialBasis::full(n_x, 2, {0, 1});
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);

  std::vector<PolyTerm> terms;
  for (int r = 0; r < n_x; ++r) {
    for (int c = 0; c < n_x; ++c) {
      terms.push_back({r, c, {}, -1, unif(rng)});
      terms.push_back({r, c, expo(n_x, {{0, 1}}), -1, unif(rng)});
      terms.push_back({r, c, expo(n_x, {{0, 1}, {1, 1}}), 0, unif(rng)});
      terms.push_back({r, c, expo(n_x, {{1, 2}}), 1, unif(rng)});
    }
  }
  AffineThetaMatrix a0, a1;
  decompose_dynamics(terms, basis, 2, &a0, &a1);

  for (int trial = 0; trial < 50; ++trial) {
    VectorXd x(n_x), th(2);
    for (int i = 0; i < n_x; ++i) x[i] = unif(rng);
    for (int i = 0; i < 2; ++i) th[i] = unif(rng);

    MatrixXd direct = MatrixXd::Zero(n_x, n_x);
    for (const auto& t : terms) {
      const double thf = t.theta_index < 0 ? 1.0 : th[t.theta_index];
      VectorXi e = t.exponents.size() == 0 ? VectorXi::Zero(n_x) : t.exponents;
      double mono = 1.0;
      for (int i = 0; i < n_x; ++i) mono *= std::pow(x[i], e[i]);
      direct(t.row, t.col) += t.coeff * thf * mono;
    }
    const MatrixXd lifted = a0.at(th) + eval_pi(basis, x).transpose() * a1.at(th);
    CHECK((direct - lifted).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("decompose_dynamics rejects out-of-basis monomials") {
  const auto basis = MonomialBasis::full(2, 2, {0});
  AffineThetaMatrix a0, a1;
  SUBCASE("degree overflow") {
    std::vector<PolyTerm> terms = {{0, 0, expo(2, {{0, 3}}), -1, 1.0}};
    CHECK_THROWS_AS(decompose_dynamics(terms, basis, 0, &a0, &a1), std::invalid_argument);
  }
  SUBCASE("inactive variable") {
    std::vector<PolyTerm> terms = {{0, 0, expo(2, {{1, 1}}), -1, 1.0}};
    CHECK_THROWS_AS(decompose_dynamics(terms, basis, 0, &a0, &a1), std::invalid_argument);
  }
  SUBCASE("theta index out of range") {
    std::vector<PolyTerm> terms = {{0, 0, {}, 2, 1.0}};
    CHECK_THROWS_AS(decompose_dynamics(terms, basis, 1, &a0, &a1), std::invalid_argument);
  }
}

TEST_CASE("build_bw matches the section-V joint input matrix") {
  const auto model = make_vdp_model(0.1);
  const MatrixXd bw = model.Bw().at(VectorXd::Constant(1, 0.7));
  MatrixXd expected(3, 2);
  expected << 0, 0, 0.1, 0.1, 0, 0;
  CHECK((bw - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("build_bw scales columns by eta and rejects nonpositive eta") {
  const auto model = make_vdp_model(0.1);
  const auto bw2 = build_bw(model.Bu, model.Bd, 2.0, 1.0);
  const MatrixXd m = bw2.at(VectorXd::Constant(1, 0.5));
  CHECK(m(1, 0) == doctest::Approx(0.2));
  CHECK(m(1, 1) == doctest::Approx(0.1));
  CHECK_THROWS_AS(build_bw(model.Bu, model.Bd, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("boundary inputs map to the boundary of W") {
  // With eta_u = eta_d = 1, |u2| = 1/sqrt(2) and |d| = 1/sqrt(2) put the
  // normalized joint input w = [u2/eta_u; d/eta_d] exactly on w'w = 1.
  const double eta_u = 1.0, eta_d = 1.0;
  const double u2 = 1.0 / (std::sqrt(2.0) * eta_u);
  const double d = 1.0 / (std::sqrt(2.0) * eta_d);
  const Eigen::Vector2d w(u2 / eta_u, d / eta_d);
  CHECK(w.squaredNorm() == doctest::Approx(1.0));
}

TEST_CASE("vertex enumeration") {
  SUBCASE("section V: |x1| <= 2 with two theta vertices gives 4 vertices") {
    const auto model = make_vdp_model(0.1);
    const auto verts =
        enumerate_vertices(model.X, model.basis.active_vars(), model.theta_vertices, 3);
    REQUIRE(verts.size() == 4);
    for (const auto& [x, th] : verts) {
      CHECK(std::abs(x[0]) == doctest::Approx(2.0));
      CHECK(x[1] == 0.0);
      CHECK(x[2] == 0.0);
      CHECK((th[0] == doctest::Approx(0.5) || th[0] == doctest::Approx(0.9)));
    }
  }
  SUBCASE("single theta point with one active variable gives 2 vertices") {
    const auto model = make_vdp_model(0.1);
    const auto verts = enumerate_vertices(model.X, model.basis.active_vars(),
                                          {VectorXd::Constant(1, 0.75)}, 3);
    CHECK(verts.size() == 2);
  }
  SUBCASE("two active vars and two theta vertices give 8") {
    StateDomain dom;
    dom.half_planes = {Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0), Eigen::Vector2d(0, 0.25),
                       Eigen::Vector2d(0, -0.25)};
    const auto verts = enumerate_vertices(
        dom, {0, 1}, {VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 1.0)}, 2);
    CHECK(verts.size() == 8);
  }
  SUBCASE("unbounded active variable is rejected") {
    StateDomain dom;
    dom.half_planes = {Eigen::Vector2d(1, 0)};  // no lower bound on x1
    CHECK_THROWS_AS(dom.vertex_grid({0}), std::invalid_argument);
  }
}
