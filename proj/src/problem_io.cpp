/*
 Copyright 2026 The smpc authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "smpc/problem_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "smpc/numkernel.hpp"

namespace smpc {

using nlohmann::json;

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ParseError("field '" + field + "': expected a non-empty array of rows");
  }
  const size_t cols = j[0].is_array() ? j[0].size() : j.size();
  const size_t rows = j[0].is_array() ? j.size() : 1;
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    const json& row = j[0].is_array() ? j[i] : j;
    if (!row.is_array() || row.size() != cols) {
      throw ParseError("field '" + field + "': row " + std::to_string(i) +
                       " is malformed (expected " + std::to_string(cols) +
                       " numbers)");
    }
    for (size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ParseError("field '" + field + "': entry (" + std::to_string(i) +
                         "," + std::to_string(c) + ") is not a number");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row[c].get<double>();
    }
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ParseError("field '" + field + "': expected a non-empty array");
  }
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ParseError("field '" + field + "': entry " + std::to_string(i) +
                       " is not a number");
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

const json& require(const json& j, const std::string& key,
                    const std::string& scope) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError("missing field '" + scope + key + "'");
  }
  return *it;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Tightening parse_tightening(const std::string& s) {
  if (s == "gaussian") return Tightening::kGaussian;
  if (s == "cantelli") return Tightening::kCantelli;
  if (s == "unimodal") return Tightening::kUnimodal;
  throw ParseError("field 'scheme.tightening': unknown value '" + s + "'");
}

}  // namespace

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("problem file is not valid JSON: ") + e.what());
  }

  ProblemFile p;
  const json& sys = require(j, "system", "");
  p.a = parse_matrix(require(sys, "a", "system."), "system.a");
  p.b = parse_matrix(require(sys, "b", "system."), "system.b");
  p.vw = parse_matrix(require(sys, "vw", "system."), "system.vw");
  if (p.a.rows() != p.a.cols()) {
    throw ParseError("field 'system.a': must be square");
  }
  if (p.b.rows() != p.a.rows()) {
    throw ParseError("field 'system.b': row count must match system.a");
  }
  if (p.vw.rows() != p.a.rows() || p.vw.cols() != p.a.rows()) {
    throw ParseError("field 'system.vw': dimension must match system.a");
  }

  const json& cost = require(j, "cost", "");
  p.q = parse_matrix(require(cost, "q", "cost."), "cost.q");
  p.r = parse_matrix(require(cost, "r", "cost."), "cost.r");
  if (p.q.rows() != p.a.rows()) {
    throw ParseError("field 'cost.q': dimension must match system.a");
  }
  if (p.r.rows() != p.b.cols()) {
    throw ParseError("field 'cost.r': dimension must match system.b columns");
  }

  p.horizon = require(j, "horizon", "").get<int>();
  if (p.horizon < 1) throw ParseError("field 'horizon': must be >= 1");

  if (j.contains("constraints")) {
    for (size_t i = 0; i < j["constraints"].size(); ++i) {
      const json& c = j["constraints"][i];
      const std::string scope = "constraints[" + std::to_string(i) + "].";
      const Vector cv = parse_vector(require(c, "c", scope), scope + "c");
      const double d = require(c, "d", scope).get<double>();
      const double rho = require(c, "rho", scope).get<double>();
      const std::string kind_s = require(c, "kind", scope).get<std::string>();
      ConstraintKind kind;
      if (kind_s == "state") {
        kind = ConstraintKind::kState;
      } else if (kind_s == "input") {
        kind = ConstraintKind::kInput;
      } else {
        throw ParseError("field '" + scope + "kind': must be state or input");
      }
      const Eigen::Index want =
          kind == ConstraintKind::kState ? p.a.rows() : p.b.cols();
      if (cv.size() != want) {
        throw ParseError("field '" + scope + "c': expected length " +
                         std::to_string(want));
      }
      try {
        p.constraints.emplace_back(cv, d, rho, kind);
      } catch (const std::invalid_argument& e) {
        throw ParseError("field '" + scope + "': " + e.what());
      }
    }
  }

  if (j.contains("scheme")) {
    const json& s = j["scheme"];
    if (s.contains("tightening")) {
      p.tightening = parse_tightening(s["tightening"].get<std::string>());
    }
    if (s.contains("variance_mode")) {
      const std::string vm = s["variance_mode"].get<std::string>();
      if (vm == "interpolated") {
        p.variance_mode = VarianceMode::kInterpolated;
      } else if (vm == "fixed") {
        p.variance_mode = VarianceMode::kFixed;
      } else {
        throw ParseError("field 'scheme.variance_mode': must be interpolated "
                         "or fixed");
      }
    }
    if (s.contains("terminal_set")) {
      const std::string ts = s["terminal_set"].get<std::string>();
      if (ts == "invariant") {
        p.terminal_set = TerminalSetKind::kInvariant;
      } else if (ts == "tightened_base") {
        p.terminal_set = TerminalSetKind::kTightenedBase;
      } else {
        throw ParseError("field 'scheme.terminal_set': must be invariant or "
                         "tightened_base");
      }
    }
  }

  const json& sim = require(j, "sim", "");
  p.sim.steps = require(sim, "steps", "sim.").get<int>();
  p.sim.runs = require(sim, "runs", "sim.").get<int>();
  p.sim.seed = require(sim, "seed", "sim.").get<std::uint64_t>();
  p.sim.x0 = parse_vector(require(sim, "x0", "sim."), "sim.x0");
  if (p.sim.x0.size() != p.a.rows()) {
    throw ParseError("field 'sim.x0': dimension must match system.a");
  }
  if (p.sim.steps < 1 || p.sim.runs < 1) {
    throw ParseError("field 'sim': steps and runs must be >= 1");
  }
  return p;
}

SynthArtifact synthesize_problem(const ProblemFile& problem) {
  const LinearSystem sys(problem.a, problem.b, SpdMatrix(problem.vw));
  SynthArtifact art;
  art.gains = synthesize(sys, SpdMatrix(problem.q), SpdMatrix(problem.r));

  const Matrix& a = problem.a;
  const Matrix& b = problem.b;
  const Matrix& k = art.gains.k;
  const Matrix& p = art.gains.p.mat();
  const Matrix btp = b.transpose() * p;
  const Matrix riccati = a.transpose() * p * a - p -
                         a.transpose() * btp.transpose() *
                             (problem.r + btp * b).ldlt().solve(btp * a) +
                         problem.q;
  art.riccati_residual = riccati.norm() / std::max(1.0, p.norm());
  const Matrix& ve = art.gains.ve_inf.mat();
  const Matrix& ak = art.gains.a_k;
  art.lyapunov_residual = (ak * ve * ak.transpose() + problem.vw - ve).norm() /
                          std::max(1.0, ve.norm());
  (void)k;

  const Polytope base = tightened_base_constraints(
      problem.constraints, art.gains, problem.tightening);
  if (base.rows() == 0 || problem.terminal_set == TerminalSetKind::kTightenedBase) {
    art.z_f = base;
  } else {
    art.z_f = max_invariant_set(art.gains.a_k, base);
  }

  const VarianceProfile prof =
      variance_profile(art.gains, art.gains.ve_inf, problem.horizon);
  art.variance_offsets = prof.h;
  return art;
}

void save_artifact(const SynthArtifact& artifact, const std::string& path) {
  json j;
  j["k"] = matrix_to_json(artifact.gains.k);
  j["a_k"] = matrix_to_json(artifact.gains.a_k);
  j["p"] = matrix_to_json(artifact.gains.p.mat());
  j["ve_inf"] = matrix_to_json(artifact.gains.ve_inf.mat());
  j["ell_ss"] = artifact.gains.ell_ss;
  j["q"] = matrix_to_json(artifact.gains.q.mat());
  j["r"] = matrix_to_json(artifact.gains.r.mat());
  j["z_f"] = {{"c_mat", matrix_to_json(artifact.z_f.c_mat)},
              {"d_vec", vector_to_json(artifact.z_f.d_vec)}};
  json offsets = json::array();
  for (const auto& h : artifact.variance_offsets) {
    offsets.push_back(matrix_to_json(h));
  }
  j["variance_offsets"] = std::move(offsets);
  j["riccati_residual"] = artifact.riccati_residual;
  j["lyapunov_residual"] = artifact.lyapunov_residual;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write artifact: " + path);
  out << j.dump(1) << "\n";
}

SynthArtifact load_artifact(const std::string& path,
                            const ProblemFile& problem) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open artifact file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("artifact file is not valid JSON: ") + e.what());
  }
  SynthArtifact art;
  art.gains.k = parse_matrix(require(j, "k", ""), "k");
  art.gains.a_k = parse_matrix(require(j, "a_k", ""), "a_k");
  art.gains.p = SpdMatrix(parse_matrix(require(j, "p", ""), "p"));
  art.gains.ve_inf = SpdMatrix(parse_matrix(require(j, "ve_inf", ""), "ve_inf"));
  art.gains.ell_ss = require(j, "ell_ss", "").get<double>();
  art.gains.q = SpdMatrix(parse_matrix(require(j, "q", ""), "q"));
  art.gains.r = SpdMatrix(parse_matrix(require(j, "r", ""), "r"));
  const json& zf = require(j, "z_f", "");
  const Matrix c = parse_matrix(require(zf, "c_mat", "z_f."), "z_f.c_mat");
  const Vector d = parse_vector(require(zf, "d_vec", "z_f."), "z_f.d_vec");
  if (c.rows() > 0) {
    art.z_f = Polytope(c, d);
  } else {
    art.z_f = Polytope::whole_space(problem.a.rows());
  }
  for (const auto& h : require(j, "variance_offsets", "")) {
    art.variance_offsets.push_back(parse_matrix(h, "variance_offsets"));
  }
  art.riccati_residual = j.value("riccati_residual", 0.0);
  art.lyapunov_residual = j.value("lyapunov_residual", 0.0);
  return art;
}

OcpSpec make_ocp_spec(const ProblemFile& problem, const SynthArtifact& artifact) {
  OcpSpec spec{LinearSystem(problem.a, problem.b, SpdMatrix(problem.vw)),
               artifact.gains,
               problem.constraints,
               problem.horizon,
               artifact.z_f,
               problem.tightening,
               problem.variance_mode};
  spec.validate();
  return spec;
}

void write_trace_csv(const std::string& path, const OcpSpec& spec,
                     const std::vector<SimTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  const Eigen::Index nx = spec.sys.nx();
  const Eigen::Index nu = spec.sys.nu();
  out << "run,t";
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x" << (i + 1);
  for (Eigen::Index i = 0; i < nu; ++i) out << ",u" << (i + 1);
  out << ",xi,stage_cost,feasible";
  for (size_t i = 0; i < spec.constraints.size(); ++i) {
    out << ",slack_c" << (i + 1);
  }
  out << "\n";
  for (size_t r = 0; r < traces.size(); ++r) {
    const SimTrace& tr = traces[r];
    for (size_t t = 0; t < tr.x.size(); ++t) {
      out << r << "," << t;
      for (Eigen::Index i = 0; i < nx; ++i) {
        out << "," << format_full(tr.x[t](i));
      }
      for (Eigen::Index i = 0; i < nu; ++i) {
        out << "," << format_full(tr.u[t](i));
      }
      out << "," << format_full(tr.xi[t]) << ","
          << format_full(tr.stage_cost[t]) << "," << (tr.feasible[t] ? 1 : 0);
      for (size_t c = 0; c < spec.constraints.size(); ++c) {
        out << ","
            << format_full(spec.constraints[c].d -
                           tr.constraint_value[t](static_cast<Eigen::Index>(c)));
      }
      out << "\n";
    }
  }
}

void write_report(const std::string& path, const OcpSpec& spec,
                  const SimConfig& config, const McReport& report) {
  json j;
  j["scheme"] = to_string(config.scheme);
  j["runs"] = config.runs;
  j["steps"] = config.steps;
  j["seed"] = config.seed;
  j["x0"] = vector_to_json(config.x0);
  j["avg_cost"] = report.avg_cost;
  j["cost_ratio_vs_lqr"] = report.cost_ratio_vs_lqr;
  j["longrun_stage_avg"] = report.longrun_stage_avg;
  j["ell_ss"] = spec.gains.ell_ss;
  j["active_streak"] = report.active_streak;
  j["active_streak_start"] = report.active_streak_start;

  json cons = json::array();
  for (size_t c = 0; c < spec.constraints.size(); ++c) {
    cons.push_back({{"c", vector_to_json(spec.constraints[c].c)},
                    {"d", spec.constraints[c].d},
                    {"rho", spec.constraints[c].rho},
                    {"kind", spec.constraints[c].kind == ConstraintKind::kState
                                 ? "state"
                                 : "input"},
                    {"violation_rate", report.violation_rate[c]}});
  }
  j["constraints"] = std::move(cons);

  json mean_x = json::array();
  for (const auto& m : report.mean_x) mean_x.push_back(vector_to_json(m));
  j["mean_x"] = std::move(mean_x);
  j["mean_ocp_slack"] = report.mean_ocp_slack;

  json ellipses = json::array();
  for (const auto& e : report.ellipses) {
    if (e.mean.size() == 0) {
      ellipses.push_back(nullptr);
    } else {
      ellipses.push_back({{"mean", vector_to_json(e.mean)},
                          {"shape", matrix_to_json(e.shape.mat())},
                          {"radius", e.radius}});
    }
  }
  j["ellipses_90"] = std::move(ellipses);

  j["xi_quantiles"] = {{"q10", report.xi.q10},
                       {"q50", report.xi.q50},
                       {"q90", report.xi.q90}};
  j["xi_histogram"] = {{"edges", report.xi.histogram_edges},
                       {"mass", report.xi.histogram_mass}};

  json ecdfs = json::array();
  for (size_t i = 0; i < report.ecdf.size(); ++i) {
    const EcdfTable& t = report.ecdf[i];
    if (t.grid.empty()) {
      ecdfs.push_back({{"xi_bar", report.ecdf_xi_bar_grid[i]},
                       {"empty", true}});
    } else {
      ecdfs.push_back({{"xi_bar", report.ecdf_xi_bar_grid[i]},
                       {"grid", t.grid},
                       {"prob", t.prob},
                       {"samples", t.sample_count}});
    }
  }
  j["ecdf_conditioned"] = std::move(ecdfs);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace smpc
