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
#ifndef SMPC_CONVEX_HPP_
#define SMPC_CONVEX_HPP_

#include <limits>
#include <vector>

#include "smpc/types.hpp"

namespace smpc {

/// ||f_mat y + f_vec||_2 <= g_vec^T y + h_scalar.
struct SocConstraint {
  Matrix f_mat;
  Vector f_vec;
  Vector g_vec;
  double h_scalar = 0.0;
};

/// min 0.5 y'Hy + g'y + const  s.t.  A_eq y = b_eq, A_in y <= b_in,
/// SOC rows, lb <= y <= ub.  Empty matrices/vectors mean "absent".
struct ConvexProgram {
  int n = 0;
  Matrix hessian;
  Vector gradient;
  double constant = 0.0;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_in;
  Vector b_in;
  std::vector<SocConstraint> soc;
  Vector lb;
  Vector ub;

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void validate() const;
  /// 0.5 y'Hy + g'y + const (SOC terms do not contribute to the objective).
  double objective(const Vector& y) const;
  /// max over SOC rows of ||F y + f|| - (g'y + h); <= 0 when feasible.
  double soc_violation(const Vector& y) const;
  /// Worst violation over linear rows, SOC rows and bounds; <= 0 feasible.
  double violation(const Vector& y) const;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(SolveStatus s);

struct ScpIterate {
  double objective = 0.0;
  double soc_violation = 0.0;  // max residual; <= 0 means feasible
  double step_norm = 0.0;
};

struct SolveResult {
  Vector y;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::kIterationLimit;
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<ScpIterate> scp_history;  // filled by solve_scp only
};

/// Dense two-phase primal simplex with Bland's rule. The program's hessian
/// must be absent or zero.
SolveResult solve_lp(const ConvexProgram& program);

/// Dense Mehrotra-style predictor-corrector interior point method for
/// strictly convex QPs with linear constraints (SOC rows are rejected).
/// A semidefinite hessian is regularized with 1e-9 I.
SolveResult solve_qp(const ConvexProgram& program);

struct ScpOptions {
  int max_outer = 50;
  double step_tol = 1e-8;
  double objective_tol = 1e-9;
  double soc_post_tol = 1e-8;
};

/// Sequential convexification: each SOC row is replaced by its first-order
/// Taylor linearization around the current iterate, the resulting QP is
/// solved, and the loop repeats until the iterate settles. The returned
/// point satisfies every original SOC row within soc_post_tol.
SolveResult solve_scp(const ConvexProgram& program, const Vector& y_init,
                      const ScpOptions& opts = {});

}  // namespace smpc

#endif  // SMPC_CONVEX_HPP_
