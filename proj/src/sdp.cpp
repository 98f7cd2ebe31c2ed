#include "polyiss/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace polyiss::sdp {

Eigen::MatrixXd ConstraintBlock::eval(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd m = f0;
  for (const BlockTerm& t : terms) {
    const double zi = z[t.var];
    if (zi == 0.0) continue;
    for (const SymTriplet& e : t.entries) {
      m(e.r, e.c) += zi * e.v;
      if (e.r != e.c) m(e.c, e.r) += zi * e.v;
    }
  }
  return m;
}

BlockBuilder::BlockBuilder(int dim) : dim_(dim), f0_(Eigen::MatrixXd::Zero(dim, dim)) {}

void BlockBuilder::add_const(int r, int c, double v) { f0_(r, c) += v; }

void BlockBuilder::add_const_mirrored(int r, int c, double v) {
  f0_(r, c) += v;
  if (r != c) f0_(c, r) += v;
}

void BlockBuilder::add(int var, int r, int c, double v) {
  if (v != 0.0) raw_.push_back({var, r, c, v});
}

void BlockBuilder::add_mirrored(int var, int r, int c, double v) {
  add(var, r, c, v);
  if (r != c) add(var, c, r, v);
}

ConstraintBlock BlockBuilder::finish() const {
  const double scale = std::max(1.0, f0_.cwiseAbs().maxCoeff());
  if ((f0_ - f0_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::logic_error("BlockBuilder: constant part is not symmetric");

  // Accumulate literal entries per variable, then verify symmetry and
  // compress to upper-triangle triplets.
  std::map<int, Eigen::MatrixXd> per_var;
  for (const RawEntry& e : raw_) {
    auto [it, inserted] = per_var.try_emplace(e.var, Eigen::MatrixXd::Zero(dim_, dim_));
    it->second(e.r, e.c) += e.v;
  }

  ConstraintBlock block;
  block.dim = dim_;
  block.f0 = 0.5 * (f0_ + f0_.transpose());
  for (const auto& [var, m] : per_var) {
    const double vscale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * vscale)
      throw std::logic_error("BlockBuilder: coefficient of variable " + std::to_string(var) +
                             " is not symmetric");
    BlockTerm term;
    term.var = var;
    for (int r = 0; r < dim_; ++r) {
      for (int c = r; c < dim_; ++c) {
        if (m(r, c) != 0.0) term.entries.push_back({r, c, m(r, c)});
      }
    }
    if (!term.entries.empty()) block.terms.push_back(std::move(term));
  }
  return block;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical_failure";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

struct FullEntry {
  int r, c;
  double v;
};

struct ExpVar {
  int var;
  std::vector<FullEntry> entries;
};

struct ExpBlock {
  int dim;
  Eigen::MatrixXd f0;
  std::vector<ExpVar> vars;
};

Eigen::MatrixXd eval_exp(const ExpBlock& b, const Eigen::VectorXd& z) {
  Eigen::MatrixXd m = b.f0;
  for (const ExpVar& ev : b.vars) {
    const double zi = z[ev.var];
    if (zi == 0.0) continue;
    for (const FullEntry& e : ev.entries) m(e.r, e.c) += zi * e.v;
  }
  return m;
}

// Barrier subproblem: minimize eta * c.z - sum_b logdet F_b(z)
//                     - sum_i [log(R - z_i) + log(R + z_i)]
class BarrierProblem {
 public:
  BarrierProblem(std::vector<ExpBlock> blocks, Eigen::VectorXd cost, double var_bound)
      : blocks_(std::move(blocks)), cost_(std::move(cost)), bound_(var_bound) {
    cone_dim_ = 2 * static_cast<int>(cost_.size());
    for (const auto& b : blocks_) cone_dim_ += b.dim;
  }

  int num_vars() const { return static_cast<int>(cost_.size()); }
  int cone_dim() const { return cone_dim_; }
  const Eigen::VectorXd& cost() const { return cost_; }

  bool strictly_feasible(const Eigen::VectorXd& z) const {
    if ((z.array().abs() >= bound_).any()) return false;
    for (const auto& b : blocks_) {
      Eigen::LLT<Eigen::MatrixXd> llt(eval_exp(b, z));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Assumes strict feasibility of z.
  double value(double eta, const Eigen::VectorXd& z) const {
    double f = eta * cost_.dot(z);
    for (const auto& b : blocks_) {
      Eigen::LLT<Eigen::MatrixXd> llt(eval_exp(b, z));
      f -= 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    f -= (bound_ - z.array()).log().sum() + (bound_ + z.array()).log().sum();
    return f;
  }

  void gradient_hessian(double eta, const Eigen::VectorXd& z, Eigen::VectorXd* g,
                        Eigen::MatrixXd* h) const {
    const int p = num_vars();
    *g = eta * cost_;
    *h = Eigen::MatrixXd::Zero(p, p);
    for (const auto& b : blocks_) {
      const Eigen::MatrixXd a = eval_exp(b, z);
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      const Eigen::MatrixXd s = llt.solve(Eigen::MatrixXd::Identity(b.dim, b.dim));
      const int nv = static_cast<int>(b.vars.size());
      for (int i = 0; i < nv; ++i) {
        const ExpVar& vi = b.vars[i];
        double gi = 0.0;
        for (const FullEntry& e : vi.entries) gi += e.v * s(e.r, e.c);
        (*g)[vi.var] -= gi;
        for (int j = i; j < nv; ++j) {
          const ExpVar& vj = b.vars[j];
          double hij = 0.0;
          for (const FullEntry& e1 : vi.entries) {
            for (const FullEntry& e2 : vj.entries) {
              hij += e1.v * e2.v * s(e1.c, e2.r) * s(e2.c, e1.r);
            }
          }
          (*h)(vi.var, vj.var) += hij;
          if (vi.var != vj.var) (*h)(vj.var, vi.var) += hij;
        }
      }
    }
    for (int i = 0; i < p; ++i) {
      const double lo = bound_ + z[i], hi = bound_ - z[i];
      (*g)[i] += 1.0 / hi - 1.0 / lo;
      (*h)(i, i) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }
  }

 private:
  std::vector<ExpBlock> blocks_;
  Eigen::VectorXd cost_;
  double bound_;
  int cone_dim_;
};

enum class CenterOutcome { Centered, Stalled, StepLimit };

CenterOutcome center(const BarrierProblem& bp, double eta, const Options& opts,
                     Eigen::VectorXd* z, int* newton_steps) {
  const int p = bp.num_vars();
  Eigen::VectorXd g(p);
  Eigen::MatrixXd h(p, p);
  for (int iter = 0; iter < opts.max_center_steps; ++iter) {
    bp.gradient_hessian(eta, *z, &g, &h);

    Eigen::VectorXd step;
    double ridge = 0.0;
    for (;;) {
      Eigen::MatrixXd hr = h;
      if (ridge > 0.0) {
        for (int i = 0; i < p; ++i) hr(i, i) += ridge * std::max(std::abs(h(i, i)), 1.0);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hr);
      step = ldlt.solve(-g);
      if (ldlt.info() == Eigen::Success && g.dot(step) < 0.0) break;
      ridge = ridge == 0.0 ? 1e-12 : ridge * 100.0;
      if (ridge > 1.0) return CenterOutcome::Stalled;
    }

    const double dec2 = -g.dot(step);
    if (0.5 * dec2 <= opts.center_tol) return CenterOutcome::Centered;

    // Damped Newton: the decrement-scaled step is guaranteed to stay in
    // the domain of a self-concordant barrier, so backtracking from it is
    // rare and progress per iteration is bounded below.
    const double dec = std::sqrt(std::max(dec2, 0.0));
    const double f0 = bp.value(eta, *z);
    const double damped = 1.0 / (1.0 + dec);
    double alpha = 1.0;
    bool moved = false;
    while (alpha >= 1e-16) {
      const Eigen::VectorXd zn = *z + alpha * step;
      if (bp.strictly_feasible(zn) && bp.value(eta, zn) <= f0 - 0.25 * alpha * dec2) {
        *z = zn;
        moved = true;
        break;
      }
      alpha = alpha > damped ? damped : 0.5 * alpha;
    }
    ++*newton_steps;
    if (!moved) {
      // No further progress; accept as near-centered if the decrement is
      // already small, otherwise give up.
      return 0.5 * dec2 < 1e-4 ? CenterOutcome::Centered : CenterOutcome::Stalled;
    }
  }
  return CenterOutcome::StepLimit;
}

double block_min_eig(const ConstraintBlock& b, const Eigen::VectorXd& z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.eval(z), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

Result BarrierSolver::solve(const Problem& problem, const Options& opts) {
  Result res;
  const int p = problem.num_vars;
  if (p < 0) throw std::invalid_argument("sdp: negative variable count");
  Eigen::VectorXd cost = problem.cost.size() == 0 ? Eigen::VectorXd::Zero(p) : problem.cost;
  if (cost.size() != p) throw std::invalid_argument("sdp: cost dimension mismatch");
  const bool has_objective = cost.cwiseAbs().maxCoeff() > 0.0;

  std::vector<ExpBlock> blocks;
  for (const ConstraintBlock& b : problem.blocks) {
    if (b.dim == 0) continue;
    if (b.f0.rows() != b.dim || b.f0.cols() != b.dim)
      throw std::invalid_argument("sdp: block constant dimension mismatch");
    ExpBlock eb;
    eb.dim = b.dim;
    eb.f0 = b.f0;
    for (const BlockTerm& t : b.terms) {
      if (t.var < 0 || t.var >= p) throw std::invalid_argument("sdp: term variable out of range");
      ExpVar ev;
      ev.var = t.var;
      for (const SymTriplet& e : t.entries) {
        ev.entries.push_back({e.r, e.c, e.v});
        if (e.r != e.c) ev.entries.push_back({e.c, e.r, e.v});
      }
      eb.vars.push_back(std::move(ev));
    }
    blocks.push_back(std::move(eb));
  }

  if (p == 0) {
    bool ok = true;
    for (const auto& b : blocks) {
      Eigen::LLT<Eigen::MatrixXd> llt(b.f0);
      ok = ok && llt.info() == Eigen::Success;
    }
    res.status = ok ? Status::Feasible : Status::Infeasible;
    res.z = Eigen::VectorXd();
    return res;
  }

  // ---- Phase 1: minimize t with F_b(z) + t I >= 0.
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(p);
  double t0 = 0.0;
  for (const auto& b : blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(eval_exp(b, z0), Eigen::EigenvaluesOnly);
    t0 = std::max(t0, -es.eigenvalues().minCoeff());
  }
  t0 += 1.0;

  std::vector<ExpBlock> ph1_blocks = blocks;
  for (auto& b : ph1_blocks) {
    ExpVar tv;
    tv.var = p;
    for (int i = 0; i < b.dim; ++i) tv.entries.push_back({i, i, 1.0});
    b.vars.push_back(std::move(tv));
  }
  Eigen::VectorXd ph1_cost = Eigen::VectorXd::Zero(p + 1);
  ph1_cost[p] = 1.0;
  BarrierProblem ph1(std::move(ph1_blocks), ph1_cost, std::max(opts.var_bound, 2.0 * t0));

  Eigen::VectorXd zt(p + 1);
  zt.head(p) = z0;
  zt[p] = t0;

  double eta = opts.eta0;
  bool feasible_found = false;
  double prev_t = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const CenterOutcome oc = center(ph1, eta, opts, &zt, &res.newton_steps);
    if (opts.verbose) {
      std::printf("phase1 outer=%d eta=%.3e t=%.6e outcome=%d steps=%d\n", outer, eta, zt[p],
                  static_cast<int>(oc), res.newton_steps);
    }
    if (zt[p] <= -opts.phase1_target) {
      feasible_found = true;
      break;
    }
    // Gap estimates: certified from the barrier parameter, empirical from
    // the per-stage objective decrease (t_k - t* ~ m / eta_k).
    const double cert_gap = ph1.cone_dim() / eta;
    const double est_gap = outer > 0 ? std::abs(prev_t - zt[p]) / (opts.eta_factor - 1.0)
                                     : std::numeric_limits<double>::infinity();
    const double gap = std::min(cert_gap, est_gap);
    if (gap < 1e-10 * std::max(1.0, std::abs(zt[p])) || (oc == CenterOutcome::Stalled && gap < 1e-6)) {
      if (zt[p] - gap > -1e-8) {
        res.status = Status::Infeasible;
        res.z = zt.head(p);
        res.message = "phase-1 margin " + std::to_string(zt[p]);
        return res;
      }
      feasible_found = zt[p] < 0.0;
      break;
    }
    if (oc == CenterOutcome::Stalled) {
      res.status = Status::NumericalFailure;
      res.message = "phase-1 centering stalled at margin " + std::to_string(zt[p]);
      return res;
    }
    prev_t = zt[p];
    eta *= opts.eta_factor;
  }
  if (!feasible_found && zt[p] > -1e-9) {
    res.status = zt[p] > -1e-9 ? Status::Infeasible : Status::NumericalFailure;
    res.z = zt.head(p);
    res.message = "phase-1 margin " + std::to_string(zt[p]);
    return res;
  }

  Eigen::VectorXd z = zt.head(p);
  res.z = z;
  res.status = Status::Feasible;

  // ---- Phase 2: follow the central path for the linear objective.
  if (has_objective) {
    BarrierProblem ph2(std::move(blocks), cost, opts.var_bound);
    if (!ph2.strictly_feasible(z)) {
      res.status = Status::NumericalFailure;
      res.message = "phase-1 point not strictly feasible for phase 2";
      return res;
    }
    eta = opts.eta0;
    bool converged = false;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      const CenterOutcome oc = center(ph2, eta, opts, &z, &res.newton_steps);
      const double obj = cost.dot(z);
      if (opts.verbose) {
        std::printf("phase2 outer=%d eta=%.3e obj=%.9e outcome=%d steps=%d\n", outer, eta, obj,
                    static_cast<int>(oc), res.newton_steps);
      }
      const double cert_gap = ph2.cone_dim() / eta;
      const double est_gap = outer > 0 ? std::abs(prev_obj - obj) / (opts.eta_factor - 1.0)
                                       : std::numeric_limits<double>::infinity();
      const double gap = std::min(cert_gap, est_gap);
      if (gap < std::max(opts.gap_tol, 1e-6 * std::abs(obj))) {
        converged = true;
        break;
      }
      if (oc == CenterOutcome::Stalled) {
        // Numerical floor of the barrier; accept when the achieved gap
        // estimate is still tight relative to the objective.
        converged = gap < std::max(1e3 * opts.gap_tol, 1e-3 * std::abs(obj));
        res.message = "stalled at estimated gap " + std::to_string(gap);
        break;
      }
      prev_obj = obj;
      eta *= opts.eta_factor;
    }
    res.z = z;
    res.status = converged ? Status::Optimal : Status::IterationLimit;
  }

  res.objective = cost.dot(res.z);
  res.min_margin = std::numeric_limits<double>::infinity();
  for (const ConstraintBlock& b : problem.blocks) {
    if (b.dim == 0) continue;
    res.min_margin = std::min(res.min_margin, block_min_eig(b, res.z));
  }
  if (problem.blocks.empty()) res.min_margin = 0.0;
  return res;
}

Result solve(const Problem& problem, const Options& options) {
  BarrierSolver solver;
  return solver.solve(problem, options);
}

}  // namespace polyiss::sdp
