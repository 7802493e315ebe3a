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
#include "smpc/polytope.hpp"

#include <algorithm>
#include <cmath>

#include "smpc/convex.hpp"
#include "smpc/numkernel.hpp"

namespace smpc {

Polytope::Polytope(Matrix c, Vector d) : c_mat(std::move(c)), d_vec(std::move(d)) {
  if (c_mat.rows() != d_vec.size()) {
    throw std::invalid_argument("Polytope: row count mismatch");
  }
  for (Eigen::Index i = 0; i < c_mat.rows(); ++i) {
    const double norm = c_mat.row(i).norm();
    if (norm == 0.0) {
      throw std::invalid_argument("Polytope: all-zero row");
    }
    c_mat.row(i) /= norm;
    d_vec(i) /= norm;
  }
}

Polytope Polytope::whole_space(Eigen::Index dim) {
  Polytope p;
  p.c_mat = Matrix(0, dim);
  p.d_vec = Vector(0);
  return p;
}

bool contains(const Polytope& p, const Vector& x, double tol) {
  if (x.size() != p.dim()) {
    throw std::invalid_argument("contains: dimension mismatch");
  }
  if (p.rows() == 0) return true;
  return ((p.c_mat * x - p.d_vec).array() <= tol).all();
}

double support(const Polytope& p, const Vector& c) {
  if (p.rows() == 0) {
    return c.norm() == 0.0 ? 0.0
                           : std::numeric_limits<double>::infinity();
  }
  ConvexProgram lp;
  lp.n = static_cast<int>(p.dim());
  lp.gradient = -c;  // max c'x = -min (-c)'x
  lp.a_in = p.c_mat;
  lp.b_in = p.d_vec;
  const SolveResult r = solve_lp(lp);
  switch (r.status) {
    case SolveStatus::kOptimal:
      return c.dot(r.y);
    case SolveStatus::kUnbounded:
      return std::numeric_limits<double>::infinity();
    case SolveStatus::kInfeasible:
      throw SolveFailed("support: polytope is empty");
    default:
      throw SolveFailed("support: LP did not terminate");
  }
}

Polytope reduce(const Polytope& p) {
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < p.rows(); ++i) kept.push_back(i);

  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    // Candidate set = currently kept rows minus row i.
    std::vector<Eigen::Index> others;
    for (Eigen::Index j : kept) {
      if (j != i) others.push_back(j);
    }
    if (others.empty()) continue;
    Matrix c(others.size(), p.dim());
    Vector d(others.size());
    for (size_t k = 0; k < others.size(); ++k) {
      c.row(static_cast<Eigen::Index>(k)) = p.c_mat.row(others[k]);
      d(static_cast<Eigen::Index>(k)) = p.d_vec(others[k]);
    }
    const double sup = support(Polytope(std::move(c), std::move(d)),
                               p.c_mat.row(i).transpose());
    if (sup <= p.d_vec(i) + 1e-9) {
      kept.erase(std::find(kept.begin(), kept.end(), i));
    }
  }

  Matrix c(kept.size(), p.dim());
  Vector d(kept.size());
  for (size_t k = 0; k < kept.size(); ++k) {
    c.row(static_cast<Eigen::Index>(k)) = p.c_mat.row(kept[k]);
    d(static_cast<Eigen::Index>(k)) = p.d_vec(kept[k]);
  }
  Polytope out;
  out.c_mat = std::move(c);
  out.d_vec = std::move(d);
  return out;
}

Polytope tightened_base_constraints(const std::vector<ChanceConstraint>& cons,
                                    const GainSet& gains, Tightening kind) {
  const Eigen::Index nx = gains.a_k.rows();
  std::vector<Vector> rows;
  std::vector<double> bounds;
  for (const auto& con : cons) {
    const double margin = tighten(con, gains.ve_inf, gains.k, kind);
    const double bound = con.d - margin;
    if (bound <= 0.0) {
      throw EmptyTightening(
          "tightened_base_constraints: risk level unattainable at steady "
          "state (tightened bound <= 0)");
    }
    if (con.kind == ConstraintKind::kState) {
      rows.push_back(con.c);
    } else {
      rows.push_back(gains.k.transpose() * con.c);  // u = K x at terminal
    }
    bounds.push_back(bound);
  }
  if (rows.empty()) return Polytope::whole_space(nx);
  Matrix c(rows.size(), nx);
  Vector d(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    c.row(static_cast<Eigen::Index>(i)) = rows[i];
    d(static_cast<Eigen::Index>(i)) = bounds[i];
  }
  return Polytope(std::move(c), std::move(d));
}

Polytope max_invariant_set(const Matrix& a_k, const Polytope& base,
                           int max_iter) {
  if (base.dim() != a_k.rows()) {
    throw std::invalid_argument("max_invariant_set: dimension mismatch");
  }
  const double rho = spectral_radius(a_k);
  if (!(rho < 1.0)) throw Unstable(rho);
  if (base.rows() == 0) return base;
  const Eigen::Index nx = base.dim();

  // Finite determination requires a compact constraint set; an unbounded
  // base (e.g. a single halfspace) makes the redundancy test fail forever
  // whenever the propagated row keeps a positive component in the
  // recession cone. In that case the iteration runs inside an operating
  // box large enough to never matter at closed-loop scale.
  bool need_box = false;
  for (Eigen::Index j = 0; j < nx && !need_box; ++j) {
    Vector e = Vector::Zero(nx);
    e(j) = 1.0;
    if (!std::isfinite(support(base, e)) || !std::isfinite(support(base, -e))) {
      need_box = true;
    }
  }

  std::vector<Vector> rows;
  std::vector<double> bounds;
  Eigen::Index seed_rows = base.rows();
  for (Eigen::Index i = 0; i < base.rows(); ++i) {
    rows.push_back(base.c_mat.row(i).transpose());
    bounds.push_back(base.d_vec(i));
  }
  if (need_box) {
    const double box = 1e4 * std::max(1.0, base.d_vec.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < nx; ++j) {
      for (double sign : {1.0, -1.0}) {
        Vector e = Vector::Zero(nx);
        e(j) = sign;
        rows.push_back(e);
        bounds.push_back(box);
      }
    }
    seed_rows = static_cast<Eigen::Index>(rows.size());
  }

  auto make_polytope = [&](size_t n_rows) {
    Matrix c(n_rows, nx);
    Vector d(n_rows);
    for (size_t i = 0; i < n_rows; ++i) {
      c.row(static_cast<Eigen::Index>(i)) = rows[i];
      d(static_cast<Eigen::Index>(i)) = bounds[i];
    }
    return Polytope(std::move(c), std::move(d));
  };

  Matrix ak_pow = a_k;  // a_k^{i+1}
  bool any_propagated = false;
  for (int i = 0; i < max_iter; ++i) {
    const Polytope omega = make_polytope(rows.size());
    bool any_added = false;
    for (Eigen::Index r = 0; r < seed_rows; ++r) {
      const Vector row = ak_pow.transpose() * rows[static_cast<size_t>(r)];
      const double d_r = bounds[static_cast<size_t>(r)];
      if (row.norm() < 1e-12) continue;  // dynamics decayed this row away
      const double sup = support(omega, row);
      if (sup <= d_r + 1e-9) continue;  // redundant, slack >= -1e-9
      rows.push_back(row);
      bounds.push_back(d_r);
      any_added = true;
      any_propagated = true;
    }
    if (!any_added) {
      if (need_box && !any_propagated) {
        // The dynamics never generated a binding row, so the box was
        // not load-bearing; return the plain base.
        return reduce(base);
      }
      return reduce(omega);
    }
    ak_pow = a_k * ak_pow;
  }
  throw IterationLimit(
      "max_invariant_set: determinedness index exceeds max_iter");
}

}  // namespace smpc
