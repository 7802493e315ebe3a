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
#ifndef SMPC_CONTROLLER_HPP_
#define SMPC_CONTROLLER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "smpc/convex.hpp"
#include "smpc/model.hpp"
#include "smpc/polytope.hpp"
#include "smpc/types.hpp"

namespace smpc {

enum class VarianceMode { kInterpolated, kFixed };

/// Problem data for the per-step surrogate OCP.
struct OcpSpec {
  LinearSystem sys;
  GainSet gains;
  std::vector<ChanceConstraint> constraints;
  int n = 1;  // horizon
  Polytope z_f;
  Tightening tightening = Tightening::kGaussian;
  VarianceMode variance_mode = VarianceMode::kInterpolated;

  void validate() const;
};

struct SolverStats {
  int scp_iterations = 0;
  double kkt_residual = 0.0;
  double soc_residual = 0.0;
  std::vector<ScpIterate> history;
};

struct OcpSolution {
  std::vector<Vector> v;   // n inputs
  std::vector<Vector> z;   // n+1 nominal states
  std::vector<Matrix> ve;  // n+1 error variances
  double xi = 0.0;
  SpdMatrix sigma_n;
  double cost = 0.0;
  double min_tightened_slack = 0.0;  // over all stage chance rows
  SolverStats solver_stats;
};

struct ControllerState {
  Vector z1_prev;
  SpdMatrix ve1_prev;
  std::optional<OcpSolution> last_solution;
  long t = 0;
};

/// Thm-1 initialization: z1(-1) = x0, Ve1(-1) = Ve_inf.
ControllerState initial_controller_state(const OcpSpec& spec, const Vector& x0);

/// Surrogate OCP condensed onto the decision vector y = (xi, v_0..v_{n-1}).
/// Nominal states are affine in y (z_k = z_base_k + z_map_k y) and the
/// error variances enter through the profile Ve_k = xi^2 g[k] + h[k]
/// (fixed mode: g = 0, h = Ve_inf).
struct OcpAssembly {
  ConvexProgram program;
  Matrix z_map;    // (n+1)*nx x nvar
  Vector z_base;   // (n+1)*nx
  VarianceProfile prof;
  int n = 0;
  Eigen::Index nx = 0;
  Eigen::Index nu = 0;

  Vector state_at(int k, const Vector& y) const;
  Vector input_at(int k, const Vector& y) const;
};

OcpAssembly assemble_ocp(const OcpSpec& spec, const Vector& x_t,
                         const ControllerState& state);

/// The spec'd deterministic surrogate program for one step.
ConvexProgram build_ocp(const OcpSpec& spec, const Vector& x_t,
                        const ControllerState& state);

/// The program with the interpolation variable pinned; SOC margins become
/// exact constants, yielding a plain linear-constraint QP.
ConvexProgram restrict_xi(const ConvexProgram& program, double xi);

/// xi^2 ||x_t - z1_prev||_P^2.
double initial_cost_beta(const Vector& x_t, const Vector& z1_prev,
                         const SpdMatrix& p, double xi);

/// ||z_n||_P^2 + trace((Q + K'RK) dlyap(a_k, ve_n)).
double terminal_cost(const Vector& z_n, const SpdMatrix& ve_n,
                     const GainSet& gains);

/// Shifted previous solution with xi = 1 and the terminal controller
/// appended; the Thm-1 recursive feasibility candidate.
Vector shifted_candidate(const OcpSpec& spec, const ControllerState& state);

struct StepResult {
  Vector u;
  ControllerState next;
  OcpSolution sol;
};

StepResult step_ivsmpc(const OcpSpec& spec, const ControllerState& state,
                       const Vector& x_t);
StepResult step_icsmpc(const OcpSpec& spec, const ControllerState& state,
                       const Vector& x_t);
Vector step_lqr(const GainSet& gains, const Vector& x_t);

/// Structured-text record of a failed (or interesting) solve for offline
/// debugging.
std::string dump_problem(const ConvexProgram& program, const SolveResult& result);

}  // namespace smpc

#endif  // SMPC_CONTROLLER_HPP_
