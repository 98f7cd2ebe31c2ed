#pragma once

// Minimal semidefinite-programming backend for LMI feasibility and
// eigenvalue-bound objectives:
//
//   minimize  cost . z   subject to   F0_b + sum_i z_i F_{b,i}  PSD
//
// over a scalar decision vector z and a list of affine symmetric blocks.
// The bundled solver is a log-barrier interior-point method (phase-1
// feasibility, then path following); every iterate is strictly feasible,
// so returned points carry positive margins on all blocks. An implicit
// box |z_i| <= var_bound keeps the barrier problem bounded.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace polyiss::sdp {

// One symmetric coefficient entry at (r, c), r <= c; off-diagonal entries
// implicitly mirror to (c, r).
struct SymTriplet {
  int r = 0;
  int c = 0;
  double v = 0.0;
};

struct BlockTerm {
  int var = 0;
  std::vector<SymTriplet> entries;
};

struct ConstraintBlock {
  int dim = 0;
  Eigen::MatrixXd f0;
  std::vector<BlockTerm> terms;

  Eigen::MatrixXd eval(const Eigen::VectorXd& z) const;
};

struct Problem {
  int num_vars = 0;
  Eigen::VectorXd cost;  // empty or zero => pure feasibility
  std::vector<ConstraintBlock> blocks;
};

// Accumulates one affine symmetric block. add() writes a literal matrix
// entry; add_mirrored() also writes the transpose position. finish()
// checks that the accumulated block is symmetric and compresses the
// coefficients to upper-triangle triplets.
class BlockBuilder {
 public:
  explicit BlockBuilder(int dim);

  void add_const(int r, int c, double v);
  void add_const_mirrored(int r, int c, double v);
  void add(int var, int r, int c, double v);
  void add_mirrored(int var, int r, int c, double v);

  ConstraintBlock finish() const;

 private:
  struct RawEntry {
    int var, r, c;
    double v;
  };

  int dim_;
  Eigen::MatrixXd f0_;
  std::vector<RawEntry> raw_;
};

enum class Status { Optimal, Feasible, Infeasible, NumericalFailure, IterationLimit };

const char* to_string(Status s);

struct Options {
  double var_bound = 1e6;        // implicit |z_i| bound
  double gap_tol = 1e-9;         // absolute duality-gap target on the objective
  double phase1_target = 1e-5;   // stop phase-1 once this feasibility margin is reached
  double center_tol = 1e-10;     // Newton decrement^2 / 2 threshold
  double eta0 = 1.0;
  double eta_factor = 10.0;
  int max_center_steps = 200;
  int max_outer = 64;
  bool verbose = false;
};

struct Result {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd z;
  double objective = 0.0;
  // Smallest eigenvalue over all blocks at the returned point.
  double min_margin = 0.0;
  int newton_steps = 0;
  std::string message;

  bool feasible() const { return status == Status::Optimal || status == Status::Feasible; }
};

// Abstract conic backend; the synthesis layer only depends on this surface.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual Result solve(const Problem& problem, const Options& options) = 0;
};

class BarrierSolver final : public ConicSolver {
 public:
  Result solve(const Problem& problem, const Options& options) override;
};

// Convenience wrapper using the bundled barrier backend.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace polyiss::sdp
