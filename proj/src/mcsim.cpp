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
#include "smpc/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "smpc/numkernel.hpp"

namespace smpc {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t run)
    : key_(seed ^ mix(run + kGolden)) {}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double CounterRng::uniform01() {
  // 53-bit mantissa, shifted into (0, 1].
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double CounterRng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

Vector sample_disturbance(CounterRng& rng, const Matrix& vw_chol) {
  Vector eta(vw_chol.rows());
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = rng.gaussian();
  return vw_chol * eta;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kIvsmpc: return "ivsmpc";
    case Scheme::kIcsmpc: return "icsmpc";
    case Scheme::kLqr: return "lqr";
  }
  return "unknown";
}

SimTrace run_closed_loop(const OcpSpec& spec, Scheme scheme, const Vector& x0,
                         int steps, CounterRng& rng) {
  if (steps < 1) throw std::invalid_argument("run_closed_loop: steps >= 1");
  const Matrix vw_chol = cholesky(spec.sys.vw);
  SimTrace trace;
  trace.x.reserve(steps);

  Vector x = x0;
  ControllerState state = initial_controller_state(spec, x0);
  for (int t = 0; t < steps; ++t) {
    Vector u;
    Vector z0 = x;
    double xi = 0.0;
    double slack = std::numeric_limits<double>::infinity();
    bool feasible = true;
    if (scheme == Scheme::kLqr) {
      u = step_lqr(spec.gains, x);
    } else {
      StepResult step = scheme == Scheme::kIvsmpc
                            ? step_ivsmpc(spec, state, x)
                            : step_icsmpc(spec, state, x);
      u = step.u;
      z0 = step.sol.z[0];
      xi = step.sol.xi;
      slack = step.sol.min_tightened_slack;
      state = std::move(step.next);
    }
    trace.x.push_back(x);
    trace.u.push_back(u);
    trace.z0.push_back(z0);
    trace.xi.push_back(xi);
    trace.stage_cost.push_back(x.dot(spec.gains.q.mat() * x) +
                               u.dot(spec.gains.r.mat() * u));
    trace.feasible.push_back(feasible);
    Vector cv(static_cast<Eigen::Index>(spec.constraints.size()));
    for (size_t i = 0; i < spec.constraints.size(); ++i) {
      const auto& con = spec.constraints[i];
      cv(static_cast<Eigen::Index>(i)) =
          con.kind == ConstraintKind::kState ? con.c.dot(x) : con.c.dot(u);
    }
    trace.constraint_value.push_back(cv);
    trace.ocp_slack.push_back(slack);

    x = spec.sys.a * x + spec.sys.b * u + sample_disturbance(rng, vw_chol);
  }
  return trace;
}

std::vector<SimTrace> monte_carlo_traces(const OcpSpec& spec,
                                         const SimConfig& config) {
  if (config.runs < 1 || config.steps < 1) {
    throw std::invalid_argument("monte_carlo: runs and steps must be >= 1");
  }
  std::vector<SimTrace> traces(config.runs);
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const int workers = std::max(1, config.workers);
  auto work = [&](int worker_id) {
    try {
      for (int r = worker_id; r < config.runs; r += workers) {
        CounterRng rng(config.seed, static_cast<std::uint64_t>(r));
        traces[r] = run_closed_loop(spec, config.scheme, config.x0,
                                    config.steps, rng);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return traces;
}

std::vector<double> violation_rate(const std::vector<SimTrace>& traces,
                                   const ChanceConstraint& con,
                                   int constraint_index) {
  if (traces.empty()) return {};
  const int steps = static_cast<int>(traces.front().x.size());
  std::vector<double> rate(steps, 0.0);
  for (const auto& tr : traces) {
    for (int t = 0; t < steps; ++t) {
      if (tr.constraint_value[t](constraint_index) > con.d) rate[t] += 1.0;
    }
  }
  for (auto& r : rate) r /= static_cast<double>(traces.size());
  return rate;
}

CostMetrics cost_metrics(const std::vector<SimTrace>& scheme_traces,
                         const std::vector<SimTrace>& lqr_traces,
                         const GainSet& gains, int trailing_window) {
  (void)gains;
  auto total = [](const std::vector<SimTrace>& traces) {
    double sum = 0.0;
    for (const auto& tr : traces) {
      for (double c : tr.stage_cost) sum += c;
    }
    return sum / static_cast<double>(traces.size());
  };
  CostMetrics m;
  m.avg_cost = total(scheme_traces);
  const double lqr_cost = total(lqr_traces);
  m.ratio = lqr_cost > 0.0 ? m.avg_cost / lqr_cost : 1.0;

  const int steps = static_cast<int>(scheme_traces.front().stage_cost.size());
  const int window = std::min(trailing_window, steps);
  double tail = 0.0;
  for (const auto& tr : scheme_traces) {
    for (int t = steps - window; t < steps; ++t) tail += tr.stage_cost[t];
  }
  m.longrun_stage_avg =
      tail / (static_cast<double>(scheme_traces.size()) * window);
  return m;
}

EllipseEstimate confidence_ellipse(const std::vector<SimTrace>& traces, int t,
                                   double level) {
  const Eigen::Index nx = traces.front().x.front().size();
  const double n_runs = static_cast<double>(traces.size());
  Vector mean = Vector::Zero(nx);
  for (const auto& tr : traces) mean += tr.x[t];
  mean /= n_runs;
  Matrix cov = Matrix::Zero(nx, nx);
  for (const auto& tr : traces) {
    const Vector d = tr.x[t] - mean;
    cov += d * d.transpose();
  }
  if (traces.size() < 2) {
    throw SingularCovariance("confidence_ellipse: need at least two runs");
  }
  cov /= (n_runs - 1.0);
  EllipseEstimate e;
  e.mean = mean;
  try {
    cholesky(SpdMatrix(cov));  // PD gate
  } catch (const NotPositiveDefinite&) {
    throw SingularCovariance("confidence_ellipse: sample covariance singular");
  }
  e.shape = SpdMatrix(cov);
  e.radius = std::sqrt(chi_square_quantile(level, static_cast<int>(nx)));
  return e;
}

namespace {

double nearest_rank(std::vector<double>& sorted_values, double q) {
  // Nearest-rank on a presorted vector.
  const size_t n = sorted_values.size();
  const size_t rank =
      std::max<size_t>(1, static_cast<size_t>(std::ceil(q * n)));
  return sorted_values[std::min(rank, n) - 1];
}

}  // namespace

XiQuantiles xi_distribution(const std::vector<SimTrace>& traces) {
  XiQuantiles out;
  if (traces.empty()) return out;
  const int steps = static_cast<int>(traces.front().xi.size());
  out.q10.resize(steps);
  out.q50.resize(steps);
  out.q90.resize(steps);
  std::vector<double> buf(traces.size());
  for (int t = 0; t < steps; ++t) {
    for (size_t r = 0; r < traces.size(); ++r) buf[r] = traces[r].xi[t];
    std::sort(buf.begin(), buf.end());
    out.q10[t] = nearest_rank(buf, 0.10);
    out.q50[t] = nearest_rank(buf, 0.50);
    out.q90[t] = nearest_rank(buf, 0.90);
  }
  const int bins = 20;
  out.histogram_edges.resize(bins + 1);
  out.histogram_mass.assign(bins, 0.0);
  for (int b = 0; b <= bins; ++b) {
    out.histogram_edges[b] = static_cast<double>(b) / bins;
  }
  long total = 0;
  for (const auto& tr : traces) {
    for (double v : tr.xi) {
      int b = std::min(bins - 1, static_cast<int>(v * bins));
      b = std::max(0, b);
      out.histogram_mass[b] += 1.0;
      ++total;
    }
  }
  if (total > 0) {
    for (auto& m : out.histogram_mass) m /= static_cast<double>(total);
  }
  return out;
}

std::vector<double> default_ecdf_grid(const ChanceConstraint& con) {
  // 601 points spanning [d - 4, d + 2].
  std::vector<double> grid(601);
  for (int i = 0; i < 601; ++i) grid[i] = con.d - 4.0 + 6.0 * i / 600.0;
  return grid;
}

EcdfTable ecdf_conditioned(const std::vector<SimTrace>& traces, double xi_bar,
                           int t_max, const ChanceConstraint& con,
                           int constraint_index,
                           const std::vector<double>& grid) {
  (void)con;
  std::vector<double> samples;
  const int steps = traces.empty() ? 0 : static_cast<int>(traces.front().x.size());
  const int limit = std::min(t_max, steps - 1);  // x(t+1) must be recorded
  for (const auto& tr : traces) {
    for (int t = 0; t < limit; ++t) {
      if (tr.xi[t] < xi_bar) {
        samples.push_back(tr.constraint_value[t + 1](constraint_index));
      }
    }
  }
  if (samples.empty()) {
    throw EmptyCondition("ecdf_conditioned: no (run, t) pair satisfies the "
                         "conditioning");
  }
  std::sort(samples.begin(), samples.end());
  EcdfTable table;
  table.grid = grid;
  table.prob.resize(grid.size());
  table.sample_count = static_cast<long>(samples.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    const auto it =
        std::upper_bound(samples.begin(), samples.end(), grid[i]);
    table.prob[i] = static_cast<double>(it - samples.begin()) /
                    static_cast<double>(samples.size());
  }
  return table;
}

McReport aggregate_report(const OcpSpec& spec, const SimConfig& config,
                          const std::vector<SimTrace>& traces) {
  McReport rep;
  const int steps = config.steps;
  const double n_runs = static_cast<double>(traces.size());

  for (size_t c = 0; c < spec.constraints.size(); ++c) {
    rep.violation_rate.push_back(
        violation_rate(traces, spec.constraints[c], static_cast<int>(c)));
  }

  rep.mean_x.resize(steps);
  rep.mean_ocp_slack.assign(steps, 0.0);
  for (int t = 0; t < steps; ++t) {
    Vector mean = Vector::Zero(spec.sys.nx());
    double slack = 0.0;
    for (const auto& tr : traces) {
      mean += tr.x[t];
      slack += std::isfinite(tr.ocp_slack[t]) ? tr.ocp_slack[t] : 1e30;
    }
    rep.mean_x[t] = mean / n_runs;
    rep.mean_ocp_slack[t] = slack / n_runs;
  }

  if (traces.size() >= static_cast<size_t>(spec.sys.nx()) + 1) {
    rep.ellipses.reserve(steps);
    for (int t = 0; t < steps; ++t) {
      try {
        rep.ellipses.push_back(confidence_ellipse(traces, t, 0.9));
      } catch (const SingularCovariance&) {
        rep.ellipses.push_back(EllipseEstimate{});  // e.g. deterministic t=0
      }
    }
  }

  double total = 0.0;
  for (const auto& tr : traces) {
    for (double c : tr.stage_cost) total += c;
  }
  rep.avg_cost = total / n_runs;
  const int window = std::min(20, steps);
  double tail = 0.0;
  for (const auto& tr : traces) {
    for (int t = steps - window; t < steps; ++t) tail += tr.stage_cost[t];
  }
  rep.longrun_stage_avg = tail / (n_runs * window);

  rep.xi = xi_distribution(traces);

  // Constraint-activity streak of the mean trajectory.
  int best_len = 0, best_start = -1, cur_len = 0, cur_start = -1;
  for (int t = 0; t < steps; ++t) {
    if (rep.mean_ocp_slack[t] < 1e-6) {
      if (cur_len == 0) cur_start = t;
      ++cur_len;
      if (cur_len > best_len) {
        best_len = cur_len;
        best_start = cur_start;
      }
    } else {
      cur_len = 0;
    }
  }
  rep.active_streak = best_len;
  rep.active_streak_start = best_start;

  if (!spec.constraints.empty() && config.scheme != Scheme::kLqr) {
    const ChanceConstraint& con = spec.constraints.front();
    const std::vector<double> grid = default_ecdf_grid(con);
    rep.ecdf_xi_bar_grid = {1e-9, 0.25, 0.5, 0.75, 1.0 + 1e-9};
    for (double xb : rep.ecdf_xi_bar_grid) {
      try {
        rep.ecdf.push_back(
            ecdf_conditioned(traces, xb, 25, con, 0, grid));
      } catch (const EmptyCondition&) {
        rep.ecdf.push_back(EcdfTable{});  // curve omitted downstream
      }
    }
  }
  return rep;
}

}  // namespace smpc
