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
#include "smpc/convex.hpp"

#include <algorithm>
#include <cmath>

namespace smpc {

void ConvexProgram::validate() const {
  if (n <= 0) throw std::invalid_argument("ConvexProgram: n must be positive");
  auto check_rows = [&](const Matrix& m, const Vector& v, const char* what) {
    if (m.size() == 0 && v.size() == 0) return;
    if (m.cols() != n || m.rows() != v.size()) {
      throw std::invalid_argument(std::string("ConvexProgram: bad ") + what);
    }
  };
  if (hessian.size() != 0 && (hessian.rows() != n || hessian.cols() != n)) {
    throw std::invalid_argument("ConvexProgram: bad hessian");
  }
  if (gradient.size() != 0 && gradient.size() != n) {
    throw std::invalid_argument("ConvexProgram: bad gradient");
  }
  check_rows(a_eq, b_eq, "equality block");
  check_rows(a_in, b_in, "inequality block");
  for (const auto& s : soc) {
    if (s.f_mat.cols() != n || s.f_vec.size() != s.f_mat.rows() ||
        s.g_vec.size() != n) {
      throw std::invalid_argument("ConvexProgram: bad SOC row");
    }
  }
  if (lb.size() != 0 && lb.size() != n) {
    throw std::invalid_argument("ConvexProgram: bad lb");
  }
  if (ub.size() != 0 && ub.size() != n) {
    throw std::invalid_argument("ConvexProgram: bad ub");
  }
}

double ConvexProgram::objective(const Vector& y) const {
  double v = constant;
  if (gradient.size() != 0) v += gradient.dot(y);
  if (hessian.size() != 0) v += 0.5 * y.dot(hessian * y);
  return v;
}

double ConvexProgram::soc_violation(const Vector& y) const {
  double worst = -kInf;
  for (const auto& s : soc) {
    const double lhs = (s.f_mat * y + s.f_vec).norm();
    const double rhs = s.g_vec.dot(y) + s.h_scalar;
    worst = std::max(worst, lhs - rhs);
  }
  return soc.empty() ? 0.0 : worst;
}

double ConvexProgram::violation(const Vector& y) const {
  double worst = soc_violation(y);
  if (a_in.rows() > 0) worst = std::max(worst, (a_in * y - b_in).maxCoeff());
  if (a_eq.rows() > 0) {
    worst = std::max(worst, (a_eq * y - b_eq).cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < n; ++j) {
    if (lb.size() != 0 && std::isfinite(lb(j))) {
      worst = std::max(worst, lb(j) - y(j));
    }
    if (ub.size() != 0 && std::isfinite(ub(j))) {
      worst = std::max(worst, y(j) - ub(j));
    }
  }
  return worst;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-9;

// Dense tableau simplex on min c'x, M x = rhs, x >= 0, with Bland's rule.
// Prices columns [0, n_price); the right-hand side lives in column rhs_col.
SolveStatus simplex_core(Matrix& tab, std::vector<int>& basis, int m,
                         int n_price, int rhs_col, long max_pivots) {
  for (long pivot_count = 0; pivot_count < max_pivots; ++pivot_count) {
    int enter = -1;
    for (int j = 0; j < n_price; ++j) {
      if (tab(m, j) < -kCostTol) {
        enter = j;
        break;  // Bland: smallest index
      }
    }
    if (enter < 0) return SolveStatus::kOptimal;

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = tab(i, enter);
      if (a > kPivotTol) {
        const double ratio = tab(i, rhs_col) / a;
        if (leave < 0 || ratio < best_ratio - 1e-14 ||
            (std::abs(ratio - best_ratio) <= 1e-14 &&
             basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return SolveStatus::kUnbounded;

    // Pivot on (leave, enter).
    const double piv = tab(leave, enter);
    tab.row(leave) /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = tab(i, enter);
      if (f != 0.0) tab.row(i) -= f * tab.row(leave);
    }
    basis[leave] = enter;
  }
  return SolveStatus::kIterationLimit;
}

}  // namespace

SolveResult solve_lp(const ConvexProgram& program) {
  program.validate();
  if (program.hessian.size() != 0 && program.hessian.norm() != 0.0) {
    throw std::invalid_argument("solve_lp: hessian must be zero");
  }
  const int n = program.n;

  // Assemble rows: equalities first, then inequalities (bounds folded in).
  std::vector<Vector> rows;
  std::vector<double> rhs;
  std::vector<bool> is_eq;
  auto add_row = [&](const Vector& a, double b, bool eq) {
    // Unit-scale each row; keeps the tableau well conditioned when rows
    // of very different magnitudes are mixed.
    const double norm = a.norm();
    if (norm > 0.0) {
      rows.push_back(a / norm);
      rhs.push_back(b / norm);
    } else {
      rows.push_back(a);
      rhs.push_back(b);
    }
    is_eq.push_back(eq);
  };
  for (Eigen::Index i = 0; i < program.a_eq.rows(); ++i) {
    add_row(program.a_eq.row(i), program.b_eq(i), true);
  }
  for (Eigen::Index i = 0; i < program.a_in.rows(); ++i) {
    add_row(program.a_in.row(i), program.b_in(i), false);
  }
  for (int j = 0; j < n; ++j) {
    if (program.lb.size() != 0 && std::isfinite(program.lb(j))) {
      Vector a = Vector::Zero(n);
      a(j) = -1.0;
      add_row(a, -program.lb(j), false);
    }
    if (program.ub.size() != 0 && std::isfinite(program.ub(j))) {
      Vector a = Vector::Zero(n);
      a(j) = 1.0;
      add_row(a, program.ub(j), false);
    }
  }

  const int m = static_cast<int>(rows.size());
  const int n_slack =
      static_cast<int>(std::count(is_eq.begin(), is_eq.end(), false));
  // Free variables split as y = y+ - y-.
  const int n_struct = 2 * n + n_slack;
  const int cols = n_struct + m;  // + artificials

  Matrix tab = Matrix::Zero(m + 1, cols + 1);
  int slack_idx = 0;
  for (int i = 0; i < m; ++i) {
    Vector r = rows[i];
    double b = rhs[i];
    int s_col = -1;
    if (!is_eq[i]) s_col = 2 * n + slack_idx++;
    const double sign = (b < 0.0) ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      tab(i, j) = sign * r(j);
      tab(i, n + j) = -sign * r(j);
    }
    if (s_col >= 0) tab(i, s_col) = sign;
    tab(i, n_struct + i) = 1.0;  // artificial
    tab(i, cols) = sign * b;
  }

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n_struct + i;

  SolveResult result;
  result.y = Vector::Zero(n);

  // Phase 1: minimize sum of artificials.
  for (int j = n_struct; j < cols; ++j) tab(m, j) = 1.0;
  for (int i = 0; i < m; ++i) tab.row(m) -= tab.row(i);  // price out basis
  const long max_pivots = 2000L + 50L * static_cast<long>(cols);
  SolveStatus st = simplex_core(tab, basis, m, cols, cols, max_pivots);
  if (st == SolveStatus::kIterationLimit) {
    result.status = st;
    return result;
  }
  const double phase1 = -tab(m, cols);
  if (phase1 > 1e-7) {
    result.status = SolveStatus::kInfeasible;
    return result;
  }
  // Pivot remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n_struct) {
      int enter = -1;
      for (int j = 0; j < n_struct; ++j) {
        if (std::abs(tab(i, j)) > 1e-9) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        const double piv = tab(i, enter);
        tab.row(i) /= piv;
        for (int k = 0; k <= m; ++k) {
          if (k == i) continue;
          const double f = tab(k, enter);
          if (f != 0.0) tab.row(k) -= f * tab.row(i);
        }
        basis[i] = enter;
      }
    }
  }
  // Disable artificial columns for phase 2.
  for (int i = 0; i <= m; ++i) {
    for (int j = n_struct; j < cols; ++j) tab(i, j) = 0.0;
  }

  // Phase 2 objective: min g'(y+ - y-).
  tab.row(m).setZero();
  if (program.gradient.size() != 0) {
    for (int j = 0; j < n; ++j) {
      tab(m, j) = program.gradient(j);
      tab(m, n + j) = -program.gradient(j);
    }
  }
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n_struct && std::abs(tab(m, basis[i])) > 0.0) {
      tab.row(m) -= tab(m, basis[i]) * tab.row(i);
    }
  }
  st = simplex_core(tab, basis, m, n_struct, cols, max_pivots);
  result.status = st;
  if (st != SolveStatus::kOptimal) return result;

  Vector x = Vector::Zero(n_struct);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n_struct) x(basis[i]) = tab(i, cols);
  }
  for (int j = 0; j < n; ++j) result.y(j) = x(j) - x(n + j);
  result.objective_value = program.objective(result.y);
  return result;
}

}  // namespace smpc
