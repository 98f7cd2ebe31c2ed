#pragma once

// On-disk formats: plant descriptions, synthesis solutions, ESN models and
// run configurations as JSON; simulation traces and datasets as CSV with
// full double precision.

#include "polyiss/esn.hpp"
#include "polyiss/lmi.hpp"
#include "polyiss/polymodel.hpp"
#include "polyiss/sim.hpp"

#include <numbers>
#include <string>

namespace polyiss::io {

// Plant description: n_x, q, active_vars, theta_vertices, polynomial
// entries of A, affine-in-theta Bu/Bd, C, eta_u/eta_d, X half-planes.
PolyQuasiLpvModel load_plant(const std::string& path);
PolyQuasiLpvModel parse_plant(const std::string& json_text);

struct SolutionFile {
  lmi::SynthesisSolution solution;
  MonomialBasis basis;
  double eta_u = 1.0;
  double eta_d = 1.0;
  double ts = 0.1;

  lmi::GainFunction gains() const { return {solution.K0, solution.K1, basis}; }
};

void save_solution(const SolutionFile& file, const std::string& path);
SolutionFile load_solution(const std::string& path);

struct EsnFile {
  esn::EsnModel model;
  esn::EmbeddingSpec spec;
  double eta_u = 1.0;
};

void save_esn(const EsnFile& file, const std::string& path);
EsnFile load_esn(const std::string& path);

// Trace CSV: header "t,x1,x2,x3,y,u1,u2,u,d", one row per sample.
void save_trace_csv(const sim::SimTrace& trace, const std::string& path);
sim::SimTrace load_trace_csv(const std::string& path);

// Dataset CSV: embedding input columns u0..u{d-1} followed by the target.
void save_dataset_csv(const esn::InverseDataset& dataset, const std::string& path);

struct DisturbanceConfig {
  std::string type = "sinusoid";  // sinusoid | filtered_noise | zero
  double amplitude = 0.25 * std::numbers::sqrt2;
  std::vector<double> frequencies = {1.0, 2.0};
  double cutoff_hz = 0.5;
  std::uint64_t seed = 11;
};

struct RunConfig {
  std::string plant = "builtin:vdp";
  double ts = 0.1;
  std::string theta_mode = "fixed";  // fixed | vertices
  double theta_fixed = 0.75;
  std::vector<double> mu_grid;  // empty -> default 0.05:0.05:0.95
  int mu_refine_iters = 0;
  double strictness_eps = 1e-7;

  esn::EsnConfig esn;  // n_upsilon derived from the embedding
  int washout = 100;
  esn::EmbeddingSpec embedding;

  int collect_samples = 5000;
  double u2_cutoff_hz = 0.5;
  double d_cutoff_hz = 0.5;
  std::uint64_t collect_seed = 7;

  DisturbanceConfig disturbance;
  Eigen::Vector3d x0{-0.0225, 0.252, 0.005};
  double theta_sim = 0.75;
  double duration = 60.0;
  int substeps = 10;

  int iss_samples = 10000;
  std::uint64_t iss_seed = 12345;

  sim::DisturbanceSignal make_disturbance(double eta_d, int n_samples) const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

}  // namespace polyiss::io
