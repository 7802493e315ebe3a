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
#ifndef SMPC_POLYTOPE_HPP_
#define SMPC_POLYTOPE_HPP_

#include <vector>

#include "smpc/model.hpp"
#include "smpc/types.hpp"

namespace smpc {

/// {x : c_mat x <= d_vec}. Rows are normalized to unit Euclidean length
/// on construction for conditioning; all-zero rows are rejected.
struct Polytope {
  Matrix c_mat;  // m x n
  Vector d_vec;  // m

  Polytope() = default;
  Polytope(Matrix c, Vector d);

  Eigen::Index rows() const { return c_mat.rows(); }
  Eigen::Index dim() const { return c_mat.cols(); }
  bool empty_rows() const { return c_mat.rows() == 0; }

  static Polytope whole_space(Eigen::Index dim);
};

bool contains(const Polytope& p, const Vector& x, double tol = 1e-9);

/// Supremum of c'x over the polytope; +inf when unbounded in that
/// direction. Throws SolveFailed when the polytope is empty.
double support(const Polytope& p, const Vector& c);

/// Removes every row whose bound cannot be approached within 1e-9 under
/// the remaining rows.
Polytope reduce(const Polytope& p);

/// State and input chance constraints tightened at the steady-state
/// variance and mapped onto the state via the terminal controller
/// (input rows become (K'c)'x <= d - margin). Throws EmptyTightening
/// when some tightened bound is nonpositive.
Polytope tightened_base_constraints(const std::vector<ChanceConstraint>& cons,
                                    const GainSet& gains, Tightening kind);

/// Maximal positively invariant polytope for x+ = a_k x inside `base`:
/// rows c' a_k^{i+1} x <= d are intersected until all new rows are
/// redundant. Throws IterationLimit past max_iter.
Polytope max_invariant_set(const Matrix& a_k, const Polytope& base,
                           int max_iter = 500);

}  // namespace smpc

#endif  // SMPC_POLYTOPE_HPP_
