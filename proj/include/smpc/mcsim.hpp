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
#ifndef SMPC_MCSIM_HPP_
#define SMPC_MCSIM_HPP_

#include <cstdint>
#include <vector>

#include "smpc/controller.hpp"
#include "smpc/types.hpp"

namespace smpc {

/// Counter-based generator (splitmix64 output function). A fixed
/// (seed, run) pair defines the entire stream regardless of worker
/// scheduling, which is what makes the Monte Carlo runs reproducible.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t run);

  std::uint64_t next_u64();
  /// Uniform in (0, 1].
  double uniform01();
  /// Standard normal via Box-Muller on consecutive counter draws.
  double gaussian();

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// w = vw_chol * eta with eta iid standard normal.
Vector sample_disturbance(CounterRng& rng, const Matrix& vw_chol);

enum class Scheme { kIvsmpc, kIcsmpc, kLqr };

const char* to_string(Scheme s);

struct SimConfig {
  int steps = 50;
  int runs = 2000;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::kIvsmpc;
  Vector x0;
  int workers = 1;
};

/// One closed-loop realization; all vectors have length `steps`.
struct SimTrace {
  std::vector<Vector> x;                   // x(t), t = 0..T-1
  std::vector<Vector> u;                   // u(t)
  std::vector<Vector> z0;                  // z_0(t)
  std::vector<double> xi;                  // xi(t)
  std::vector<double> stage_cost;          // ||x||_Q^2 + ||u||_R^2
  std::vector<bool> feasible;              // OCP status per step
  std::vector<Vector> constraint_value;    // c_i' x(t) per constraint
  std::vector<double> ocp_slack;           // min tightened slack at solution
};

SimTrace run_closed_loop(const OcpSpec& spec, Scheme scheme, const Vector& x0,
                         int steps, CounterRng& rng);

struct EcdfTable {
  std::vector<double> grid;
  std::vector<double> prob;
  long sample_count = 0;
};

struct EllipseEstimate {
  Vector mean;
  SpdMatrix shape;   // sample covariance
  double radius = 0.0;
};

struct CostMetrics {
  double avg_cost = 0.0;
  double ratio = 1.0;
  double longrun_stage_avg = 0.0;
};

struct XiQuantiles {
  std::vector<double> q10, q50, q90;                // per step
  std::vector<double> histogram_edges;
  std::vector<double> histogram_mass;               // pooled over (run, t)
};

struct McReport {
  std::vector<std::vector<double>> violation_rate;  // [constraint][step]
  std::vector<Vector> mean_x;                       // per step
  std::vector<double> mean_ocp_slack;               // per step
  std::vector<EllipseEstimate> ellipses;            // per step (level 0.9)
  double avg_cost = 0.0;
  double cost_ratio_vs_lqr = 1.0;                   // filled when LQR known
  double longrun_stage_avg = 0.0;
  XiQuantiles xi;
  std::vector<double> ecdf_xi_bar_grid;
  std::vector<EcdfTable> ecdf;                      // per xi_bar entry
  int active_streak = 0;                            // mean-slack < 1e-6 steps
  int active_streak_start = -1;
};

/// R independent closed-loop traces; per-run streams are derived from
/// (seed, run index), so the result is bitwise identical for any worker
/// count.
std::vector<SimTrace> monte_carlo_traces(const OcpSpec& spec,
                                         const SimConfig& config);

/// Statistics over traces; `constraint_index` selects the report's eCDF
/// constraint (first state constraint when present).
McReport aggregate_report(const OcpSpec& spec, const SimConfig& config,
                          const std::vector<SimTrace>& traces);

std::vector<double> violation_rate(const std::vector<SimTrace>& traces,
                                   const ChanceConstraint& con,
                                   int constraint_index);

CostMetrics cost_metrics(const std::vector<SimTrace>& scheme_traces,
                         const std::vector<SimTrace>& lqr_traces,
                         const GainSet& gains, int trailing_window = 20);

EllipseEstimate confidence_ellipse(const std::vector<SimTrace>& traces, int t,
                                   double level = 0.9);

XiQuantiles xi_distribution(const std::vector<SimTrace>& traces);

/// Pooled eCDF of c' x(t+1) over (run, t) pairs with xi(t) < xi_bar and
/// t < t_max, evaluated on `grid`. Throws EmptyCondition when no pair
/// qualifies.
EcdfTable ecdf_conditioned(const std::vector<SimTrace>& traces, double xi_bar,
                           int t_max, const ChanceConstraint& con,
                           int constraint_index,
                           const std::vector<double>& grid);

/// Evenly spaced grid centered on the constraint bound.
std::vector<double> default_ecdf_grid(const ChanceConstraint& con);

}  // namespace smpc

#endif  // SMPC_MCSIM_HPP_
