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
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smpc/controller.hpp"
#include "smpc/figures.hpp"
#include "smpc/mcsim.hpp"
#include "smpc/numkernel.hpp"
#include "smpc/problem_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SimulateOpts {
  std::string config;
  std::string scheme = "ivsmpc";
  std::string tightening;  // empty = scheme default
  std::string artifact;
  std::string out_dir = ".";
  int runs = -1;
  int steps = -1;
  int workers = 0;
  std::optional<std::uint64_t> seed;
};

smpc::Scheme parse_scheme(const std::string& s) {
  if (s == "ivsmpc") return smpc::Scheme::kIvsmpc;
  if (s == "icsmpc") return smpc::Scheme::kIcsmpc;
  if (s == "lqr") return smpc::Scheme::kLqr;
  throw smpc::ParseError("unknown scheme '" + s + "'");
}

smpc::Vector parse_csv_vector(const std::string& s, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw smpc::ParseError(what + ": '" + tok + "' is not a number");
    }
  }
  if (vals.empty()) throw smpc::ParseError(what + ": empty vector");
  smpc::Vector v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = vals[i];
  }
  return v;
}

// Effective problem after CLI overrides; icSMPC defaults to the cantelli
// concentration tightening unless the flag says otherwise.
smpc::ProblemFile effective_problem(const SimulateOpts& opts) {
  smpc::ProblemFile p = smpc::load_problem(opts.config);
  const smpc::Scheme scheme = parse_scheme(opts.scheme);
  p.sim.scheme = scheme;
  if (scheme == smpc::Scheme::kIcsmpc) {
    p.variance_mode = smpc::VarianceMode::kFixed;
    p.tightening = smpc::Tightening::kCantelli;
  } else if (scheme == smpc::Scheme::kIvsmpc) {
    p.variance_mode = smpc::VarianceMode::kInterpolated;
    p.tightening = smpc::Tightening::kGaussian;
  }
  if (!opts.tightening.empty()) {
    if (opts.tightening == "gaussian") {
      p.tightening = smpc::Tightening::kGaussian;
    } else if (opts.tightening == "cantelli") {
      p.tightening = smpc::Tightening::kCantelli;
    } else if (opts.tightening == "unimodal") {
      p.tightening = smpc::Tightening::kUnimodal;
    } else {
      throw smpc::ParseError("unknown tightening '" + opts.tightening + "'");
    }
  }
  if (opts.runs > 0) p.sim.runs = opts.runs;
  if (opts.steps > 0) p.sim.steps = opts.steps;
  if (opts.seed) p.sim.seed = *opts.seed;
  p.sim.workers = opts.workers > 0
                      ? opts.workers
                      : static_cast<int>(std::max(
                            1u, std::thread::hardware_concurrency()));
  return p;
}

int cmd_synth(const std::string& config, const std::string& out) {
  const smpc::ProblemFile problem = smpc::load_problem(config);
  const smpc::SynthArtifact art = smpc::synthesize_problem(problem);
  smpc::save_artifact(art, out);
  std::printf("gain k =\n");
  for (Eigen::Index i = 0; i < art.gains.k.rows(); ++i) {
    for (Eigen::Index j = 0; j < art.gains.k.cols(); ++j) {
      std::printf("  % .10g", art.gains.k(i, j));
    }
    std::printf("\n");
  }
  std::printf("ell_ss            = %.10g\n", art.gains.ell_ss);
  std::printf("riccati residual  = %.3e\n", art.riccati_residual);
  std::printf("lyapunov residual = %.3e\n", art.lyapunov_residual);
  std::printf("terminal set rows = %ld\n", static_cast<long>(art.z_f.rows()));
  std::printf("artifact written to %s\n", out.c_str());
  return 0;
}

int cmd_solve(const SimulateOpts& opts, const std::string& xt_csv,
              const std::string& z1_csv, double ve1_scale,
              const std::string& out) {
  const smpc::ProblemFile problem = effective_problem(opts);
  if (problem.sim.scheme == smpc::Scheme::kLqr) {
    throw smpc::ParseError("solve: scheme must be ivsmpc or icsmpc");
  }
  const smpc::SynthArtifact art =
      opts.artifact.empty() ? smpc::synthesize_problem(problem)
                            : smpc::load_artifact(opts.artifact, problem);
  const smpc::OcpSpec spec = smpc::make_ocp_spec(problem, art);

  const smpc::Vector x_t =
      xt_csv.empty() ? problem.sim.x0 : parse_csv_vector(xt_csv, "--xt");
  smpc::ControllerState state = smpc::initial_controller_state(spec, x_t);
  if (!z1_csv.empty()) state.z1_prev = parse_csv_vector(z1_csv, "--z1");
  state.ve1_prev = smpc::SpdMatrix(
      smpc::Matrix(ve1_scale * ve1_scale * spec.gains.ve_inf.mat()));

  const smpc::StepResult step =
      problem.sim.scheme == smpc::Scheme::kIvsmpc
          ? smpc::step_ivsmpc(spec, state, x_t)
          : smpc::step_icsmpc(spec, state, x_t);

  json j;
  j["xi"] = step.sol.xi;
  j["cost"] = step.sol.cost;
  j["min_tightened_slack"] = step.sol.min_tightened_slack;
  json v = json::array(), z = json::array(), ve_diag = json::array();
  for (const auto& vk : step.sol.v) {
    json row = json::array();
    for (Eigen::Index i = 0; i < vk.size(); ++i) row.push_back(vk(i));
    v.push_back(row);
  }
  for (const auto& zk : step.sol.z) {
    json row = json::array();
    for (Eigen::Index i = 0; i < zk.size(); ++i) row.push_back(zk(i));
    z.push_back(row);
  }
  for (const auto& vek : step.sol.ve) {
    json row = json::array();
    for (Eigen::Index i = 0; i < vek.rows(); ++i) row.push_back(vek(i, i));
    ve_diag.push_back(row);
  }
  j["v"] = std::move(v);
  j["z"] = std::move(z);
  j["ve_diag"] = std::move(ve_diag);
  json u = json::array();
  for (Eigen::Index i = 0; i < step.u.size(); ++i) u.push_back(step.u(i));
  j["u"] = std::move(u);
  j["scp_iterations"] = step.sol.solver_stats.scp_iterations;
  j["kkt_residual"] = step.sol.solver_stats.kkt_residual;
  if (!spec.constraints.empty()) {
    json kappas = json::array();
    for (const auto& con : spec.constraints) {
      kappas.push_back(smpc::tightening_coefficient(spec.tightening, con.rho));
    }
    j["kappa"] = std::move(kappas);
  }
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write solution file: " + out);
    os << j.dump(1) << "\n";
  }
  std::printf("xi   = %.10g\n", step.sol.xi);
  std::printf("cost = %.10g\n", step.sol.cost);
  if (!spec.constraints.empty()) {
    std::printf("kappa(rho) =");
    for (const auto& con : spec.constraints) {
      std::printf(" %.10g",
                  smpc::tightening_coefficient(spec.tightening, con.rho));
    }
    std::printf("\n");
  }
  std::printf("u    =");
  for (Eigen::Index i = 0; i < step.u.size(); ++i) {
    std::printf(" %.10g", step.u(i));
  }
  std::printf("\n");
  return 0;
}

int cmd_simulate(const SimulateOpts& opts) {
  const smpc::ProblemFile problem = effective_problem(opts);
  const smpc::SynthArtifact art =
      opts.artifact.empty() ? smpc::synthesize_problem(problem)
                            : smpc::load_artifact(opts.artifact, problem);
  const smpc::OcpSpec spec = smpc::make_ocp_spec(problem, art);

  const std::vector<smpc::SimTrace> traces =
      smpc::monte_carlo_traces(spec, problem.sim);
  smpc::McReport report = smpc::aggregate_report(spec, problem.sim, traces);

  if (problem.sim.scheme != smpc::Scheme::kLqr) {
    smpc::SimConfig lqr_config = problem.sim;
    lqr_config.scheme = smpc::Scheme::kLqr;
    const std::vector<smpc::SimTrace> lqr_traces =
        smpc::monte_carlo_traces(spec, lqr_config);
    const smpc::CostMetrics cm =
        smpc::cost_metrics(traces, lqr_traces, spec.gains);
    report.cost_ratio_vs_lqr = cm.ratio;
  }

  fs::create_directories(opts.out_dir);
  smpc::write_trace_csv((fs::path(opts.out_dir) / "trace.csv").string(), spec,
                        traces);
  smpc::write_report((fs::path(opts.out_dir) / "report.json").string(), spec,
                     problem.sim, report);

  double max_rate = 0.0;
  int max_rate_t = -1;
  for (const auto& rates : report.violation_rate) {
    for (size_t t = 0; t < rates.size(); ++t) {
      if (rates[t] > max_rate) {
        max_rate = rates[t];
        max_rate_t = static_cast<int>(t);
      }
    }
  }
  std::printf("scheme                 %s\n", smpc::to_string(problem.sim.scheme));
  std::printf("runs x steps           %d x %d (seed %llu, %d workers)\n",
              problem.sim.runs, problem.sim.steps,
              static_cast<unsigned long long>(problem.sim.seed),
              problem.sim.workers);
  std::printf("avg total cost         %.6g\n", report.avg_cost);
  std::printf("cost ratio vs lqr      %.4f\n", report.cost_ratio_vs_lqr);
  std::printf("max per-step violation %.4f (t=%d)\n", max_rate, max_rate_t);
  std::printf("active streak          %d steps (start t=%d)\n",
              report.active_streak, report.active_streak_start);
  std::printf("trailing stage avg     %.6g (ell_ss %.6g)\n",
              report.longrun_stage_avg, spec.gains.ell_ss);
  std::printf("median xi by decade   ");
  for (size_t t = 0; t < report.xi.q50.size(); t += 10) {
    std::printf(" %.3f", report.xi.q50[t]);
  }
  std::printf("\n");
  std::printf("trace and report written to %s\n", opts.out_dir.c_str());
  return 0;
}

struct LoadedReport {
  std::string dir;
  json j;
};

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<LoadedReport> reports;
  for (const auto& dir : dirs) {
    const fs::path path = fs::path(dir) / "report.json";
    std::ifstream in(path);
    if (!in) throw smpc::ParseError("cannot open " + path.string());
    LoadedReport lr;
    lr.dir = dir;
    in >> lr.j;
    reports.push_back(std::move(lr));
  }
  fs::create_directories(out);

  // Phase plot: mean trajectories and 90% ellipses.
  {
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (const auto& r : reports) {
      for (const auto& m : r.j["mean_x"]) {
        x_lo = std::min(x_lo, m[0].get<double>());
        x_hi = std::max(x_hi, m[0].get<double>());
        y_lo = std::min(y_lo, m[1].get<double>());
        y_hi = std::max(y_hi, m[1].get<double>());
      }
    }
    const double dx = 0.35 * (x_hi - x_lo) + 0.2, dy = 0.15 * (y_hi - y_lo) + 0.2;
    smpc::SvgCanvas svg(x_lo - dx, x_hi + dx, y_lo - dy, y_hi + dy);
    double con_d = 0.0;
    bool has_state_con = false;
    if (!reports.empty() && reports.front().j.contains("constraints")) {
      for (const auto& c : reports.front().j["constraints"]) {
        if (c["kind"] == "state") {
          con_d = c["d"].get<double>();
          has_state_con = true;
          break;
        }
      }
    }
    if (has_state_con) {
      svg.shade_right_of(con_d, "#d13438", 0.12);
      svg.vline(con_d, "#d13438", 1.5);
    }
    for (const auto& r : reports) {
      const std::string scheme = r.j["scheme"].get<std::string>();
      const std::string color = smpc::color_for_scheme(scheme);
      std::vector<double> xs, ys;
      for (const auto& m : r.j["mean_x"]) {
        xs.push_back(m[0].get<double>());
        ys.push_back(m[1].get<double>());
      }
      svg.polyline(xs, ys, color, 2.0);
      svg.legend_entry(color, scheme);
      if (r.j.contains("ellipses_90")) {
        const auto& ells = r.j["ellipses_90"];
        const size_t stride = std::max<size_t>(1, ells.size() / 10);
        for (size_t t = 0; t < ells.size(); t += stride) {
          if (ells[t].is_null()) continue;
          smpc::Vector mean(2);
          mean << ells[t]["mean"][0].get<double>(),
              ells[t]["mean"][1].get<double>();
          smpc::Matrix shape(2, 2);
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              shape(a, b) = ells[t]["shape"][a][b].get<double>();
            }
          }
          const double radius = ells[t]["radius"].get<double>();
          smpc::Matrix l;
          try {
            l = smpc::cholesky(smpc::SpdMatrix(shape));
          } catch (const std::exception&) {
            continue;
          }
          std::vector<double> ex, ey;
          for (int s = 0; s <= 64; ++s) {
            const double th = 2.0 * M_PI * s / 64;
            smpc::Vector unit(2);
            unit << std::cos(th), std::sin(th);
            const smpc::Vector p = mean + radius * (l * unit);
            ex.push_back(p(0));
            ey.push_back(p(1));
          }
          svg.closed_path(ex, ey, color, color, 0.06);
        }
      }
    }
    svg.axes("x1", "x2");
    std::ofstream os(fs::path(out) / "fig_phase.svg");
    os << svg.finish();
  }

  // Conditional eCDF families (one per scheme that has them).
  {
    const LoadedReport* chosen = nullptr;
    for (const auto& r : reports) {
      if (r.j.contains("ecdf_conditioned") &&
          !r.j["ecdf_conditioned"].empty() &&
          r.j["scheme"].get<std::string>() != "lqr") {
        chosen = &r;
        break;
      }
    }
    if (chosen != nullptr) {
      double g_lo = 0.0, g_hi = 1.0;
      for (const auto& e : (*chosen).j["ecdf_conditioned"]) {
        if (e.contains("grid")) {
          g_lo = e["grid"].front().get<double>();
          g_hi = e["grid"].back().get<double>();
          break;
        }
      }
      smpc::SvgCanvas svg(g_lo, g_hi, 0.0, 1.0);
      double con_d = 0.0;
      double rho = 0.9;
      bool has_con = false;
      for (const auto& c : (*chosen).j["constraints"]) {
        if (c["kind"] == "state") {
          con_d = c["d"].get<double>();
          rho = c["rho"].get<double>();
          has_con = true;
          break;
        }
      }
      if (has_con) {
        svg.shade_right_of(con_d, "#d13438", 0.12);
        svg.vline(con_d, "#d13438", 1.5);
        std::vector<double> hx = {g_lo, g_hi}, hy = {rho, rho};
        svg.polyline(hx, hy, "#d13438", 1.0, "4,3");
      }
      for (const auto& e : (*chosen).j["ecdf_conditioned"]) {
        const double xb = e["xi_bar"].get<double>();
        if (!e.contains("grid")) {
          std::printf("note: eCDF curve for xi_bar=%.3g omitted "
                      "(empty conditioning set)\n", xb);
          continue;
        }
        std::vector<double> xs, ys;
        for (const auto& v : e["grid"]) xs.push_back(v.get<double>());
        for (const auto& v : e["prob"]) ys.push_back(v.get<double>());
        svg.polyline(xs, ys, smpc::heat_color(std::min(1.0, xb)), 1.6);
      }
      svg.legend_entry(smpc::heat_color(0.0), "xi_bar -> 0");
      svg.legend_entry(smpc::heat_color(1.0), "xi_bar -> 1");
      svg.axes("constraint value at t+1", "probability");
      std::ofstream os(fs::path(out) / "fig_ecdf.svg");
      os << svg.finish();
    }
  }

  // Interpolation variable over time.
  {
    size_t steps = 0;
    for (const auto& r : reports) {
      steps = std::max(steps, r.j["xi_quantiles"]["q50"].size());
    }
    smpc::SvgCanvas svg(0.0, std::max<double>(1.0, steps - 1.0), 0.0, 1.0);
    for (const auto& r : reports) {
      const std::string scheme = r.j["scheme"].get<std::string>();
      if (scheme == "lqr") continue;
      const std::string color = smpc::color_for_scheme(scheme);
      std::vector<double> ts, q10, q50, q90;
      const auto& q = r.j["xi_quantiles"];
      for (size_t t = 0; t < q["q50"].size(); ++t) {
        ts.push_back(static_cast<double>(t));
        q10.push_back(q["q10"][t].get<double>());
        q50.push_back(q["q50"][t].get<double>());
        q90.push_back(q["q90"][t].get<double>());
      }
      svg.band(ts, q10, q90, color, 0.15);
      svg.polyline(ts, q50, color, 2.0);
      svg.legend_entry(color, scheme + " median xi");
    }
    svg.axes("t", "xi");
    std::ofstream os(fs::path(out) / "fig_xi.svg");
    os << svg.finish();
  }

  // Machine-readable metrics summary.
  {
    json metrics = json::array();
    for (const auto& r : reports) {
      json m;
      m["dir"] = r.dir;
      m["scheme"] = r.j["scheme"];
      m["avg_cost"] = r.j["avg_cost"];
      m["cost_ratio_vs_lqr"] = r.j["cost_ratio_vs_lqr"];
      m["longrun_stage_avg"] = r.j["longrun_stage_avg"];
      m["ell_ss"] = r.j["ell_ss"];
      m["active_streak"] = r.j["active_streak"];
      double max_rate = 0.0;
      if (r.j.contains("constraints")) {
        for (const auto& c : r.j["constraints"]) {
          for (const auto& v : c["violation_rate"]) {
            max_rate = std::max(max_rate, v.get<double>());
          }
        }
      }
      m["max_violation_rate"] = max_rate;
      metrics.push_back(std::move(m));
    }
    std::ofstream os(fs::path(out) / "metrics.json");
    os << metrics.dump(1) << "\n";
  }
  std::printf("figures written to %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic MPC toolkit (variance-interpolating tube SMPC)"};
  app.require_subcommand(1);

  SimulateOpts opts;
  std::string out_path = "synth.json";
  std::string xt_csv, z1_csv;
  double ve1_scale = 1.0;
  std::vector<std::string> report_dirs;
  std::string report_out = "figs";

  CLI::App* synth = app.add_subcommand("synth", "synthesize gains and terminal set");
  synth->add_option("--config", opts.config, "problem file")->required();
  synth->add_option("--out", out_path, "artifact output path");

  CLI::App* solve = app.add_subcommand("solve", "solve a single OCP instance");
  solve->add_option("--config", opts.config, "problem file")->required();
  solve->add_option("--scheme", opts.scheme, "ivsmpc|icsmpc");
  solve->add_option("--tightening", opts.tightening,
                    "gaussian|cantelli|unimodal");
  solve->add_option("--artifact", opts.artifact, "use a saved synth artifact");
  solve->add_option("--xt", xt_csv, "current state, comma separated");
  solve->add_option("--z1", z1_csv, "previous prediction z1(t-1) override");
  solve->add_option("--ve1-scale", ve1_scale,
                    "ve1(t-1) = scale^2 * ve_inf (default 1)");
  solve->add_option("--out", out_path, "solution output file");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo closed loop");
  simulate->add_option("--config", opts.config, "problem file")->required();
  simulate->add_option("--scheme", opts.scheme, "ivsmpc|icsmpc|lqr");
  simulate->add_option("--tightening", opts.tightening,
                       "gaussian|cantelli|unimodal");
  simulate->add_option("--artifact", opts.artifact, "use a saved synth artifact");
  simulate->add_option("--runs", opts.runs, "Monte Carlo runs");
  simulate->add_option("--steps", opts.steps, "closed-loop steps");
  simulate->add_option("--seed", opts.seed, "base seed");
  simulate->add_option("--workers", opts.workers, "worker threads");
  simulate->add_option("--out", opts.out_dir, "output directory");

  CLI::App* report = app.add_subcommand("report", "figures from trace dirs");
  report->add_option("dirs", report_dirs, "simulate output dirs")->required();
  report->add_option("--out", report_out, "figure output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(opts.config, out_path);
    if (solve->parsed()) {
      return cmd_solve(opts, xt_csv, z1_csv, ve1_scale,
                       out_path == "synth.json" ? "" : out_path);
    }
    if (simulate->parsed()) return cmd_simulate(opts);
    if (report->parsed()) return cmd_report(report_dirs, report_out);
  } catch (const smpc::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const smpc::InfeasibleAtStart& e) {
    std::cerr << "infeasible at start: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
