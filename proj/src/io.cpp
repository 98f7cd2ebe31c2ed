#include "polyiss/io.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace polyiss::io {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::runtime_error("plant/solution file: " + what + " must be an array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols)
      throw std::runtime_error(what + ": ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

// Affine-in-theta entries: list of {row, col, theta_index|null, coeff}.
AffineThetaMatrix affine_from_terms(const json& terms, int rows, int cols, int n_theta,
                                    const std::string& what) {
  AffineThetaMatrix m = AffineThetaMatrix::zero(rows, cols, n_theta);
  for (const auto& t : terms) {
    const int r = t.at("row").get<int>();
    const int c = t.value("col", 0);
    const double coeff = t.at("coeff").get<double>();
    const int ti = t.contains("theta_index") && !t.at("theta_index").is_null()
                       ? t.at("theta_index").get<int>()
                       : -1;
    if (r < 0 || r >= rows || c < 0 || c >= cols || ti >= n_theta)
      throw std::runtime_error(what + ": term index out of range");
    (ti < 0 ? m.constant : m.theta[ti])(r, c) += coeff;
  }
  return m;
}

const char* status_name(lmi::SynthStatus s) {
  switch (s) {
    case lmi::SynthStatus::Optimal: return "optimal";
    case lmi::SynthStatus::Infeasible: return "infeasible";
    case lmi::SynthStatus::BackendFailure: return "backend_failure";
  }
  return "unknown";
}

lmi::SynthStatus status_from_name(const std::string& s) {
  if (s == "optimal") return lmi::SynthStatus::Optimal;
  if (s == "infeasible") return lmi::SynthStatus::Infeasible;
  return lmi::SynthStatus::BackendFailure;
}

}  // namespace

PolyQuasiLpvModel parse_plant(const std::string& json_text) {
  const json j = json::parse(json_text);
  PolyQuasiLpvModel m;
  const int n_x = j.at("n_x").get<int>();
  const int n_u = j.value("n_u", 1);
  const int n_d = j.value("n_d", 1);
  const int q = j.at("q").get<int>();
  std::vector<int> active = j.value("active_vars", std::vector<int>{});
  m.basis = MonomialBasis::full(n_x, q, active);

  for (const auto& tv : j.at("theta_vertices")) m.theta_vertices.push_back(vec_from_json(tv));
  if (m.theta_vertices.empty()) throw std::runtime_error("plant file: theta_vertices is empty");
  const int n_theta = static_cast<int>(m.theta_vertices.front().size());

  std::vector<PolyTerm> terms;
  for (const auto& t : j.at("A")) {
    PolyTerm pt;
    pt.row = t.at("row").get<int>();
    pt.col = t.at("col").get<int>();
    if (t.contains("exponents") && !t.at("exponents").is_null()) {
      const auto& e = t.at("exponents");
      pt.exponents = Eigen::VectorXi(e.size());
      for (Eigen::Index i = 0; i < pt.exponents.size(); ++i)
        pt.exponents[i] = e.at(i).get<int>();
    }
    pt.theta_index = t.contains("theta_index") && !t.at("theta_index").is_null()
                         ? t.at("theta_index").get<int>()
                         : -1;
    pt.coeff = t.at("coeff").get<double>();
    terms.push_back(std::move(pt));
  }
  decompose_dynamics(terms, m.basis, n_theta, &m.A0, &m.A1);

  m.Bu = affine_from_terms(j.at("Bu"), n_x, n_u, n_theta, "Bu");
  m.Bd = affine_from_terms(j.at("Bd"), n_x, n_d, n_theta, "Bd");
  m.C = mat_from_json(j.at("C"), "C");
  m.eta_u = j.value("eta_u", 1.0);
  m.eta_d = j.value("eta_d", 1.0);
  for (const auto& h : j.at("half_planes")) m.X.half_planes.push_back(vec_from_json(h));
  m.validate();
  return m;
}

PolyQuasiLpvModel load_plant(const std::string& path) { return parse_plant(read_file(path)); }

void save_solution(const SolutionFile& file, const std::string& path) {
  const auto& s = file.solution;
  json j;
  j["status"] = status_name(s.status);
  j["mu"] = s.mu;
  j["lambda"] = s.lambda;
  j["strictness_eps"] = s.strictness_eps;
  j["Q"] = mat_to_json(s.Q);
  j["G"] = mat_to_json(s.G);
  j["M0"] = mat_to_json(s.M0);
  j["M1"] = mat_to_json(s.M1);
  j["L"] = mat_to_json(s.L);
  j["K0"] = mat_to_json(s.K0);
  j["K1"] = mat_to_json(s.K1);
  j["P"] = mat_to_json(lmi::reachable_ellipsoid(s.Q).P);
  j["margin_containment"] = s.margin_containment;
  j["margin_synthesis"] = s.margin_synthesis;
  json thetas = json::array();
  for (const auto& t : s.synth_theta) thetas.push_back(vec_to_json(t));
  j["synth_theta"] = thetas;
  j["basis"] = {{"n_x", file.basis.n_x()},
                {"q", file.basis.max_degree()},
                {"active_vars", file.basis.active_vars()}};
  j["eta_u"] = file.eta_u;
  j["eta_d"] = file.eta_d;
  j["ts"] = file.ts;
  write_file(path, j.dump(1));
}

SolutionFile load_solution(const std::string& path) {
  const json j = json::parse(read_file(path));
  SolutionFile f;
  f.solution.status = status_from_name(j.at("status").get<std::string>());
  f.solution.mu = j.at("mu").get<double>();
  f.solution.lambda = j.at("lambda").get<double>();
  f.solution.strictness_eps = j.at("strictness_eps").get<double>();
  f.solution.Q = mat_from_json(j.at("Q"), "Q");
  f.solution.G = mat_from_json(j.at("G"), "G");
  f.solution.M0 = mat_from_json(j.at("M0"), "M0");
  f.solution.M1 = mat_from_json(j.at("M1"), "M1");
  f.solution.L = mat_from_json(j.at("L"), "L");
  f.solution.K0 = mat_from_json(j.at("K0"), "K0");
  f.solution.K1 = mat_from_json(j.at("K1"), "K1");
  f.solution.margin_containment = j.at("margin_containment").get<double>();
  f.solution.margin_synthesis = j.at("margin_synthesis").get<double>();
  for (const auto& t : j.at("synth_theta")) f.solution.synth_theta.push_back(vec_from_json(t));
  const auto& b = j.at("basis");
  f.basis = MonomialBasis::full(b.at("n_x").get<int>(), b.at("q").get<int>(),
                                b.at("active_vars").get<std::vector<int>>());
  f.eta_u = j.at("eta_u").get<double>();
  f.eta_d = j.at("eta_d").get<double>();
  f.ts = j.at("ts").get<double>();
  return f;
}

void save_esn(const EsnFile& file, const std::string& path) {
  const auto& c = file.model.config;
  json j;
  j["config"] = {{"n", c.n},
                 {"n_upsilon", c.n_upsilon},
                 {"gamma", c.gamma},
                 {"rho_r", c.rho_r},
                 {"rho_upsilon", c.rho_upsilon},
                 {"rho_bias", c.rho_bias},
                 {"density", c.density},
                 {"seed", c.seed},
                 {"lambda_ridge", c.lambda_ridge}};
  j["w_reservoir"] = mat_to_json(file.model.w_reservoir);
  j["w_input"] = mat_to_json(file.model.w_input);
  j["w_bias"] = vec_to_json(file.model.w_bias);
  j["w_readout"] = mat_to_json(file.model.w_readout);
  j["embedding"] = {{"m", file.spec.m}, {"delta", file.spec.delta}};
  j["eta_u"] = file.eta_u;
  write_file(path, j.dump());
}

EsnFile load_esn(const std::string& path) {
  const json j = json::parse(read_file(path));
  EsnFile f;
  const auto& c = j.at("config");
  f.model.config.n = c.at("n").get<int>();
  f.model.config.n_upsilon = c.at("n_upsilon").get<int>();
  f.model.config.gamma = c.at("gamma").get<double>();
  f.model.config.rho_r = c.at("rho_r").get<double>();
  f.model.config.rho_upsilon = c.at("rho_upsilon").get<double>();
  f.model.config.rho_bias = c.at("rho_bias").get<double>();
  f.model.config.density = c.at("density").get<double>();
  f.model.config.seed = c.at("seed").get<std::uint64_t>();
  f.model.config.lambda_ridge = c.at("lambda_ridge").get<double>();
  f.model.w_reservoir = mat_from_json(j.at("w_reservoir"), "w_reservoir");
  f.model.w_input = mat_from_json(j.at("w_input"), "w_input");
  f.model.w_bias = vec_from_json(j.at("w_bias"));
  f.model.w_readout = mat_from_json(j.at("w_readout"), "w_readout");
  f.spec.m = j.at("embedding").at("m").get<int>();
  f.spec.delta = j.at("embedding").at("delta").get<int>();
  f.eta_u = j.at("eta_u").get<double>();
  return f;
}

void save_trace_csv(const sim::SimTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,x1,x2,x3,y,u1,u2,u,d\n";
  char buf[512];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.x[0], r.x[1],
                  r.x[2], r.y, r.u1, r.u2, r.u, r.d);
    out << buf;
  }
}

sim::SimTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,x1,x2,x3,y,u1,u2,u,d")
    throw std::runtime_error("trace file " + path + ": unexpected header");

  sim::SimTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    sim::TraceRow r;
    double x1 = 0, x2 = 0, x3 = 0;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg", &r.t, &x1, &x2, &x3, &r.y,
                    &r.u1, &r.u2, &r.u, &r.d) != 9)
      throw std::runtime_error("trace file " + path + ": malformed row");
    r.x = Eigen::Vector3d(x1, x2, x3);
    trace.rows.push_back(r);
  }
  if (trace.rows.size() >= 2) trace.ts = trace.rows[1].t - trace.rows[0].t;
  return trace;
}

void save_dataset_csv(const esn::InverseDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index j = 0; j < dataset.inputs.cols(); ++j) out << "u" << j << ",";
  out << "target\n";
  char buf[64];
  for (Eigen::Index i = 0; i < dataset.inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < dataset.inputs.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,", dataset.inputs(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g\n", dataset.targets[i]);
    out << buf;
  }
}

sim::DisturbanceSignal RunConfig::make_disturbance(double eta_d, int n_samples) const {
  if (disturbance.type == "zero") return sim::DisturbanceSignal::zero();
  if (disturbance.type == "sinusoid")
    return sim::DisturbanceSignal::sinusoid(disturbance.amplitude, disturbance.frequencies);
  if (disturbance.type == "filtered_noise") {
    const double bound = 1.0 / (std::sqrt(2.0) * eta_d);
    return sim::DisturbanceSignal::filtered_noise(n_samples, disturbance.cutoff_hz, bound, ts,
                                                  disturbance.seed);
  }
  throw std::runtime_error("config: unknown disturbance type '" + disturbance.type + "'");
}

RunConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  RunConfig c;
  c.plant = j.value("plant", c.plant);
  c.ts = j.value("Ts", c.ts);
  if (j.contains("theta")) {
    const auto& t = j.at("theta");
    c.theta_mode = t.value("mode", c.theta_mode);
    c.theta_fixed = t.value("value", c.theta_fixed);
  }
  if (c.theta_mode != "fixed" && c.theta_mode != "vertices")
    throw std::runtime_error("config: theta.mode must be 'fixed' or 'vertices'");
  if (j.contains("mu_grid")) {
    const auto& g = j.at("mu_grid");
    if (g.is_array()) {
      c.mu_grid = g.get<std::vector<double>>();
    } else {
      const double start = g.value("start", 0.05);
      const double stop = g.value("stop", 0.95);
      const double step = g.value("step", 0.05);
      if (step <= 0.0) throw std::runtime_error("config: mu_grid.step must be positive");
      for (double mu = start; mu <= stop + 1e-12; mu += step) c.mu_grid.push_back(mu);
    }
  }
  c.mu_refine_iters = j.value("mu_refine_iters", c.mu_refine_iters);
  c.strictness_eps = j.value("strictness_eps", c.strictness_eps);

  if (j.contains("esn")) {
    const auto& e = j.at("esn");
    c.esn.n = e.value("n", c.esn.n);
    c.esn.gamma = e.value("gamma", c.esn.gamma);
    c.esn.rho_r = e.value("rho_r", c.esn.rho_r);
    c.esn.rho_upsilon = e.value("rho_upsilon", c.esn.rho_upsilon);
    c.esn.rho_bias = e.value("rho_bias", c.esn.rho_bias);
    c.esn.density = e.value("density", c.esn.density);
    c.esn.seed = e.value("seed", c.esn.seed);
    c.esn.lambda_ridge = e.value("lambda_ridge", c.esn.lambda_ridge);
    c.washout = e.value("washout", c.washout);
  }
  if (j.contains("embedding")) {
    c.embedding.m = j.at("embedding").value("m", c.embedding.m);
    c.embedding.delta = j.at("embedding").value("delta", c.embedding.delta);
  }
  if (j.contains("collect")) {
    const auto& col = j.at("collect");
    c.collect_samples = col.value("samples", c.collect_samples);
    c.u2_cutoff_hz = col.value("u2_cutoff_hz", c.u2_cutoff_hz);
    c.d_cutoff_hz = col.value("d_cutoff_hz", c.d_cutoff_hz);
    c.collect_seed = col.value("seed", c.collect_seed);
  }
  if (j.contains("disturbance")) {
    const auto& d = j.at("disturbance");
    c.disturbance.type = d.value("type", c.disturbance.type);
    c.disturbance.amplitude = d.value("amplitude", c.disturbance.amplitude);
    if (d.contains("frequencies"))
      c.disturbance.frequencies = d.at("frequencies").get<std::vector<double>>();
    c.disturbance.cutoff_hz = d.value("cutoff_hz", c.disturbance.cutoff_hz);
    c.disturbance.seed = d.value("seed", c.disturbance.seed);
  }
  if (j.contains("x0")) {
    const auto x0 = j.at("x0").get<std::vector<double>>();
    if (x0.size() != 3) throw std::runtime_error("config: x0 must have 3 entries");
    c.x0 = Eigen::Vector3d(x0[0], x0[1], x0[2]);
  }
  c.theta_sim = j.value("theta_sim", c.theta_sim);
  c.duration = j.value("duration", c.duration);
  c.substeps = j.value("substeps", c.substeps);
  c.iss_samples = j.value("iss_samples", c.iss_samples);
  c.iss_seed = j.value("iss_seed", c.iss_seed);
  c.esn.n_upsilon = c.embedding.input_dim();
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace polyiss::io
