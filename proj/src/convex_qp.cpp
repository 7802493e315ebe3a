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
#include <optional>

namespace smpc {

namespace {

// Inequality rows with bounds folded in as +-e_j rows; rows are scaled to
// unit norm so mixed-magnitude constraints keep the normal matrix sane.
// A pinned variable (lb == ub) must NOT become a pair of opposing
// inequalities -- that leaves the problem without a strict interior and
// stalls the interior point method -- so those are returned as equality
// rows instead.
struct SplitConstraints {
  Matrix a_in;
  Vector b_in;
  Matrix a_eq;
  Vector b_eq;
};

SplitConstraints stack_constraints(const ConvexProgram& p) {
  std::vector<Vector> rows;
  std::vector<double> rhs;
  for (Eigen::Index i = 0; i < p.a_in.rows(); ++i) {
    const double norm = p.a_in.row(i).norm();
    if (norm > 0.0) {
      rows.push_back(p.a_in.row(i) / norm);
      rhs.push_back(p.b_in(i) / norm);
    } else {
      rows.push_back(p.a_in.row(i));
      rhs.push_back(p.b_in(i));
    }
  }
  std::vector<std::pair<int, double>> pinned;
  for (int j = 0; j < p.n; ++j) {
    const bool has_lb = p.lb.size() != 0 && std::isfinite(p.lb(j));
    const bool has_ub = p.ub.size() != 0 && std::isfinite(p.ub(j));
    if (has_lb && has_ub && p.lb(j) == p.ub(j)) {
      pinned.push_back({j, p.lb(j)});
      continue;
    }
    if (has_lb) {
      Vector a = Vector::Zero(p.n);
      a(j) = -1.0;
      rows.push_back(a);
      rhs.push_back(-p.lb(j));
    }
    if (has_ub) {
      Vector a = Vector::Zero(p.n);
      a(j) = 1.0;
      rows.push_back(a);
      rhs.push_back(p.ub(j));
    }
  }
  SplitConstraints s;
  s.a_in.resize(static_cast<Eigen::Index>(rows.size()), p.n);
  s.b_in.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    s.a_in.row(static_cast<Eigen::Index>(i)) = rows[i];
    s.b_in(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  const Eigen::Index eq_base = p.a_eq.rows();
  s.a_eq.resize(eq_base + static_cast<Eigen::Index>(pinned.size()), p.n);
  s.b_eq.resize(s.a_eq.rows());
  if (eq_base > 0) {
    s.a_eq.topRows(eq_base) = p.a_eq;
    s.b_eq.head(eq_base) = p.b_eq;
  }
  for (size_t i = 0; i < pinned.size(); ++i) {
    s.a_eq.row(eq_base + static_cast<Eigen::Index>(i)).setZero();
    s.a_eq(eq_base + static_cast<Eigen::Index>(i), pinned[i].first) = 1.0;
    s.b_eq(eq_base + static_cast<Eigen::Index>(i)) = pinned[i].second;
  }
  return s;
}

// Max complementarity + feasibility violation at (y, lambda).
double kkt_infinity_norm(const Matrix& h, const Vector& g, const Matrix& e,
                         const Vector& d, const Matrix& a, const Vector& b,
                         const Vector& y, const Vector& nu, const Vector& lam) {
  double r = 0.0;
  Vector rd = h * y + g;
  if (e.rows() > 0) rd += e.transpose() * nu;
  if (a.rows() > 0) rd += a.transpose() * lam;
  r = rd.cwiseAbs().maxCoeff();
  if (e.rows() > 0) r = std::max(r, (e * y - d).cwiseAbs().maxCoeff());
  if (a.rows() > 0) {
    const Vector slack = b - a * y;
    r = std::max(r, (-slack).maxCoeff());  // primal violation
    r = std::max(r, (lam.array() * slack.array()).abs().maxCoeff());
    r = std::max(r, -lam.minCoeff());
  }
  return r;
}

// Feasibility classification for a non-converged interior-point run.
SolveStatus classify_by_phase1(const ConvexProgram& p) {
  ConvexProgram feas = p;
  feas.hessian = Matrix();
  feas.gradient = Vector::Zero(p.n);
  feas.soc.clear();
  const SolveResult r = solve_lp(feas);
  if (r.status == SolveStatus::kInfeasible) return SolveStatus::kInfeasible;
  return SolveStatus::kIterationLimit;
}

}  // namespace

SolveResult solve_qp(const ConvexProgram& program) {
  program.validate();
  if (!program.soc.empty()) {
    throw std::invalid_argument("solve_qp: SOC rows are not supported here");
  }
  const int n = program.n;
  Matrix h = program.hessian.size() != 0 ? program.hessian
                                         : Matrix::Zero(n, n);
  h = 0.5 * (h + h.transpose()).eval();
  {
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) {
      h += 1e-9 * Matrix::Identity(n, n);
    }
  }
  const Vector g = program.gradient.size() != 0 ? program.gradient
                                                : Vector::Zero(n);
  const SplitConstraints split = stack_constraints(program);
  const Matrix& e = split.a_eq;
  const Vector& d = split.b_eq;
  const Matrix& a = split.a_in;
  const Vector& b = split.b_in;
  const int m = static_cast<int>(a.rows());
  const int p_eq = static_cast<int>(e.rows());

  SolveResult result;

  if (m == 0) {
    // Pure equality-constrained QP: one KKT solve.
    Matrix kkt = Matrix::Zero(n + p_eq, n + p_eq);
    kkt.topLeftCorner(n, n) = h;
    if (p_eq > 0) {
      kkt.topRightCorner(n, p_eq) = e.transpose();
      kkt.bottomLeftCorner(p_eq, n) = e;
    }
    Vector rhs(n + p_eq);
    rhs.head(n) = -g;
    if (p_eq > 0) rhs.tail(p_eq) = d;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) {
      result.status = SolveStatus::kInfeasible;
      return result;
    }
    const Vector sol = lu.solve(rhs);
    result.y = sol.head(n);
    result.objective_value = program.objective(result.y);
    result.status = SolveStatus::kOptimal;
    result.iterations = 1;
    result.kkt_residual = kkt_infinity_norm(h, g, e, d, a, b, result.y,
                                            sol.tail(p_eq), Vector());
    return result;
  }

  // Mehrotra predictor-corrector.
  Vector y;
  {
    Eigen::LLT<Matrix> llt(h);
    y = llt.solve(-g);
  }
  Vector nu = Vector::Zero(p_eq);
  Vector s(m), lam(m);
  {
    const Vector shat = b - a * y;
    for (int i = 0; i < m; ++i) {
      s(i) = std::max(1.0, shat(i));
      lam(i) = 1.0;
    }
  }

  const int budget = 200;
  int it = 0;
  int stall_count = 0;
  int restarts = 0;
  bool converged = false;
  for (; it < budget; ++it) {
    Vector r_d = h * y + g + a.transpose() * lam;
    if (p_eq > 0) r_d += e.transpose() * nu;
    Vector r_e = p_eq > 0 ? Vector(e * y - d) : Vector();
    Vector r_p = a * y + s - b;
    const double mu = s.dot(lam) / m;

    const double res =
        std::max({r_d.cwiseAbs().maxCoeff(),
                  p_eq > 0 ? r_e.cwiseAbs().maxCoeff() : 0.0,
                  r_p.cwiseAbs().maxCoeff()});
    if (res <= 1e-10 && mu <= 1e-11) {
      converged = true;
      break;
    }

    Vector w(m);
    for (int i = 0; i < m; ++i) {
      w(i) = std::min(1e16, std::max(1e-16, lam(i) / s(i)));
    }
    Matrix big = h;
    for (int i = 0; i < m; ++i) {
      big.noalias() += w(i) * (a.row(i).transpose() * a.row(i));
    }
    Eigen::LLT<Matrix> llt(big);
    if (llt.info() != Eigen::Success) {
      big += 1e-12 * Matrix::Identity(n, n);
      llt.compute(big);
      if (llt.info() != Eigen::Success) break;
    }

    auto solve_step = [&](const Vector& r_c, Vector& dy, Vector& dnu,
                          Vector& dlam, Vector& ds) {
      // rhs1 = -r_d - A'(W r_p - S^{-1} r_c)
      Vector tmp(m);
      for (int i = 0; i < m; ++i) tmp(i) = w(i) * r_p(i) - r_c(i) / s(i);
      const Vector rhs1 = -r_d - a.transpose() * tmp;
      if (p_eq > 0) {
        const Matrix ginv_et = llt.solve(e.transpose());
        const Vector ginv_r = llt.solve(rhs1);
        const Matrix schur = e * ginv_et;
        dnu = schur.fullPivLu().solve(e * ginv_r + r_e);
        dy = llt.solve(rhs1 - e.transpose() * dnu);
      } else {
        dnu = Vector();
        dy = llt.solve(rhs1);
      }
      dlam.resize(m);
      ds.resize(m);
      const Vector ady = a * dy;
      for (int i = 0; i < m; ++i) {
        dlam(i) = w(i) * (ady(i) + r_p(i)) - r_c(i) / s(i);
        ds(i) = -(r_c(i) + s(i) * dlam(i)) / lam(i);
      }
    };

    auto max_step = [&](const Vector& v, const Vector& dv) {
      double alpha = 1.0;
      for (int i = 0; i < m; ++i) {
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
      }
      return alpha;
    };

    // Affine (predictor) direction.
    Vector r_c_aff(m);
    for (int i = 0; i < m; ++i) r_c_aff(i) = s(i) * lam(i);
    Vector dy_a, dnu_a, dlam_a, ds_a;
    solve_step(r_c_aff, dy_a, dnu_a, dlam_a, ds_a);
    const double ap_aff = max_step(s, ds_a);
    const double ad_aff = max_step(lam, dlam_a);
    double mu_aff = 0.0;
    for (int i = 0; i < m; ++i) {
      mu_aff += (s(i) + ap_aff * ds_a(i)) * (lam(i) + ad_aff * dlam_a(i));
    }
    mu_aff /= m;
    const double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);

    // Corrector.
    Vector r_c(m);
    for (int i = 0; i < m; ++i) {
      r_c(i) = s(i) * lam(i) - sigma * mu + ds_a(i) * dlam_a(i);
    }
    Vector dy, dnu, dlam, ds;
    solve_step(r_c, dy, dnu, dlam, ds);

    const double eta = std::min(0.99995, 0.995 + 10.0 * mu);
    const double ap = std::min(1.0, eta * max_step(s, ds));
    const double ad = std::min(1.0, eta * max_step(lam, dlam));
    y += ap * dy;
    s += ap * ds;
    lam += ad * dlam;
    if (p_eq > 0) nu += ad * dnu;

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall_count >= 3) {
        if (restarts < 2) {
          // Recenter away from the boundary and retry; rescues runs where
          // a near-singular normal matrix produced a blocked direction.
          for (int i = 0; i < m; ++i) {
            s(i) = std::max(s(i), 1e-2 * (1.0 + std::abs(b(i))));
            lam(i) = std::max(lam(i), 1e-2);
          }
          stall_count = 0;
          ++restarts;
          continue;
        }
        break;
      }
    } else {
      stall_count = 0;
    }
  }

  // Active-set polish: the interior-point iterate carries O(sqrt(mu))
  // positional noise near degenerate active sets; re-solving the
  // equality-constrained KKT system on the identified active rows makes
  // the returned point deterministic to machine precision. Several
  // classifications are tried; each candidate is verified exactly, so a
  // wrong guess is simply discarded.
  {
    const double mu_now = m > 0 ? s.dot(lam) / m : 0.0;
    auto attempt = [&](const std::vector<int>& active) -> bool {
      const int na = static_cast<int>(active.size());
      Matrix kkt = Matrix::Zero(n + p_eq + na, n + p_eq + na);
      kkt.topLeftCorner(n, n) = h;
      Vector rhs(n + p_eq + na);
      rhs.head(n) = -g;
      if (p_eq > 0) {
        kkt.block(0, n, n, p_eq) = e.transpose();
        kkt.block(n, 0, p_eq, n) = e;
        rhs.segment(n, p_eq) = d;
      }
      for (int i = 0; i < na; ++i) {
        kkt.block(0, n + p_eq + i, n, 1) = a.row(active[i]).transpose();
        kkt.block(n + p_eq + i, 0, 1, n) = a.row(active[i]);
        rhs(n + p_eq + i) = b(active[i]);
      }
      Eigen::FullPivLU<Matrix> lu(kkt);
      if (!lu.isInvertible()) return false;
      const Vector sol = lu.solve(rhs);
      const Vector y_p = sol.head(n);
      Vector lam_p = Vector::Zero(m);
      for (int i = 0; i < na; ++i) {
        lam_p(active[i]) = sol(n + p_eq + i);
        if (lam_p(active[i]) < -1e-9) return false;
      }
      if (m > 0 && (a * y_p - b).maxCoeff() > 1e-9) return false;
      const double kkt_p = kkt_infinity_norm(h, g, e, d, a, b, y_p,
                                             sol.segment(n, p_eq), lam_p);
      const double kkt_ipm = kkt_infinity_norm(h, g, e, d, a, b, y, nu, lam);
      if (kkt_p > std::min(1e-9, std::max(kkt_ipm, 1e-12))) return false;
      y = y_p;
      lam = lam_p;
      if (p_eq > 0) nu = sol.segment(n, p_eq);
      converged = true;
      return true;
    };

    std::vector<std::vector<int>> guesses(3);
    for (int i = 0; i < m; ++i) {
      if (lam(i) >= s(i)) guesses[0].push_back(i);
      if (s(i) <= std::max(1e-7, 10.0 * mu_now)) guesses[1].push_back(i);
      if (s(i) <= 1e-6 * std::max(1.0, std::abs(b(i)))) guesses[2].push_back(i);
    }
    for (const auto& guess : guesses) {
      if (attempt(guess)) break;
    }
  }

  result.y = y;
  result.iterations = it;
  result.objective_value = program.objective(y);
  result.kkt_residual = kkt_infinity_norm(h, g, e, d, a, b, y, nu, lam);
  if (converged || result.kkt_residual <= 1e-8) {
    result.status = SolveStatus::kOptimal;
  } else {
    result.status = classify_by_phase1(program);
  }
  return result;
}

namespace {

// Newton refinement of the KKT conditions over the near-active rows.
// The cut loop converges linearly; once it has located the active set,
// solving stationarity + active constraints directly lands on the exact
// optimum in a few quadratic steps. Returns the refined point when the
// KKT conditions hold with nonnegative multipliers and every inactive
// row stays satisfied; convexity then certifies global optimality.
std::optional<Vector> kkt_polish(const ConvexProgram& prog, const Vector& y0) {
  const int n = prog.n;
  const Matrix h = prog.hessian.size() != 0
                       ? Matrix(0.5 * (prog.hessian + prog.hessian.transpose()))
                       : Matrix(Matrix::Zero(n, n));
  const Vector g = prog.gradient.size() != 0 ? prog.gradient
                                             : Vector(Vector::Zero(n));

  // Near-active classification at y0.
  const double act_tol = 1e-5;
  std::vector<int> soc_act, lin_act;
  std::vector<std::pair<int, double>> bound_act;  // (var, bound value)
  for (size_t r = 0; r < prog.soc.size(); ++r) {
    const auto& s = prog.soc[r];
    const double resid =
        (s.f_mat * y0 + s.f_vec).norm() - s.g_vec.dot(y0) - s.h_scalar;
    if (resid > -act_tol) soc_act.push_back(static_cast<int>(r));
  }
  for (Eigen::Index i = 0; i < prog.a_in.rows(); ++i) {
    if (prog.a_in.row(i) * y0 - prog.b_in(i) > -act_tol) {
      lin_act.push_back(static_cast<int>(i));
    }
  }
  for (int j = 0; j < n; ++j) {
    if (prog.lb.size() != 0 && std::isfinite(prog.lb(j)) &&
        y0(j) - prog.lb(j) < act_tol) {
      bound_act.push_back({j, prog.lb(j)});
    } else if (prog.ub.size() != 0 && std::isfinite(prog.ub(j)) &&
               prog.ub(j) - y0(j) < act_tol) {
      bound_act.push_back({j, prog.ub(j)});
    }
  }
  const int ns = static_cast<int>(soc_act.size());
  const int nl = static_cast<int>(lin_act.size()) +
                 static_cast<int>(bound_act.size());
  const int dim = n + ns + nl;

  // Active linear rows stacked (bounds as +-e_j rows with matching sign).
  Matrix a_act(nl, n);
  Vector b_act(nl);
  {
    int row = 0;
    for (int i : lin_act) {
      a_act.row(row) = prog.a_in.row(i);
      b_act(row) = prog.b_in(i);
      ++row;
    }
    for (auto [j, bound] : bound_act) {
      a_act.row(row).setZero();
      const bool lower = prog.lb.size() != 0 && std::isfinite(prog.lb(j)) &&
                         bound == prog.lb(j);
      a_act(row, j) = lower ? -1.0 : 1.0;
      b_act(row) = lower ? -bound : bound;
      ++row;
    }
  }

  Vector y = y0;
  Vector lam = Vector::Zero(ns);  // SOC multipliers
  Vector mu = Vector::Zero(nl);   // linear multipliers

  auto soc_value_grad = [&](int r, const Vector& at, Vector& grad,
                            Matrix* hess) -> double {
    const auto& s = prog.soc[r];
    const Vector u = s.f_mat * at + s.f_vec;
    const double norm = std::max(u.norm(), 1e-12);
    const Vector ftu = s.f_mat.transpose() * u;
    grad = ftu / norm - s.g_vec;
    if (hess != nullptr) {
      *hess = (s.f_mat.transpose() * s.f_mat - ftu * ftu.transpose() /
                                                    (norm * norm)) /
              norm;
    }
    return norm - s.g_vec.dot(at) - s.h_scalar;
  };

  // Multiplier initialization by least squares on stationarity.
  {
    Matrix m(n, ns + nl);
    for (int k = 0; k < ns; ++k) {
      Vector grad;
      soc_value_grad(soc_act[k], y, grad, nullptr);
      m.col(k) = grad;
    }
    for (int k = 0; k < nl; ++k) m.col(ns + k) = a_act.row(k).transpose();
    if (ns + nl > 0) {
      const Vector z =
          m.colPivHouseholderQr().solve(-(h * y + g));
      lam = z.head(ns);
      mu = z.tail(nl);
    }
  }

  for (int newton = 0; newton < 20; ++newton) {
    Vector f(dim);
    Matrix jac = Matrix::Zero(dim, dim);
    Vector stat = h * y + g;
    Matrix hess_total = h;
    for (int k = 0; k < ns; ++k) {
      Vector grad;
      Matrix hess;
      const double val = soc_value_grad(soc_act[k], y, grad, &hess);
      stat += lam(k) * grad;
      hess_total += lam(k) * hess;
      jac.block(0, n + k, n, 1) = grad;
      jac.block(n + k, 0, 1, n) = grad.transpose();
      f(n + k) = val;
    }
    for (int k = 0; k < nl; ++k) {
      stat += mu(k) * a_act.row(k).transpose();
      jac.block(0, n + ns + k, n, 1) = a_act.row(k).transpose();
      jac.block(n + ns + k, 0, 1, n) = a_act.row(k);
      f(n + ns + k) = a_act.row(k) * y - b_act(k);
    }
    f.head(n) = stat;
    jac.topLeftCorner(n, n) = hess_total;

    if (f.cwiseAbs().maxCoeff() <= 1e-12) break;
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) return std::nullopt;
    const Vector delta = lu.solve(-f);
    y += delta.head(n);
    lam += delta.segment(n, ns);
    mu += delta.tail(nl);
    if (delta.cwiseAbs().maxCoeff() > 1e3) return std::nullopt;  // diverging
  }

  // Certify: multipliers nonnegative, all rows satisfied, stationarity.
  if (ns + nl > 0 && (lam.size() > 0 ? lam.minCoeff() : 0.0) < -1e-9) {
    return std::nullopt;
  }
  if (mu.size() > 0 && mu.minCoeff() < -1e-9) return std::nullopt;
  if (prog.violation(y) > 1e-9) return std::nullopt;
  Vector stat = h * y + g;
  for (int k = 0; k < ns; ++k) {
    Vector grad;
    soc_value_grad(soc_act[k], y, grad, nullptr);
    stat += lam(k) * grad;
  }
  for (int k = 0; k < nl; ++k) stat += mu(k) * a_act.row(k).transpose();
  if (stat.cwiseAbs().maxCoeff() > 1e-8) return std::nullopt;
  return y;
}

}  // namespace

SolveResult solve_scp(const ConvexProgram& program, const Vector& y_init,
                      const ScpOptions& opts) {
  program.validate();
  if (y_init.size() != program.n) {
    throw std::invalid_argument("solve_scp: y_init has wrong dimension");
  }
  if (program.soc.empty()) {
    SolveResult r = solve_qp(program);
    r.scp_history.push_back({r.objective_value, 0.0, 0.0});
    return r;
  }

  Vector y = y_init;
  SolveResult result;
  result.scp_history.push_back(
      {program.objective(y), program.soc_violation(y), 0.0});

  // Tangent cuts accumulate across iterations. Replacing the whole cut set
  // each round (plain re-linearization) can limit-cycle: a tangent taken
  // far from the binding region underestimates the norm enough for the QP
  // to jump back, e.g. xi bouncing between its bounds. Keeping every cut
  // makes the linearized set shrink onto the SOC set instead. A new cut
  // whose linearization point nearly coincides with an earlier one for the
  // same row supersedes it, which stops near-duplicate rows from piling up
  // as the iterates converge.
  ConvexProgram lin = program;
  lin.soc.clear();

  struct CutSlot {
    Vector at;
    Eigen::Index row;
  };
  std::vector<std::vector<CutSlot>> slots(program.soc.size());

  auto place_cut = [&](size_t soc_index, const Vector& at, const Vector& row,
                       double rhs) {
    for (CutSlot& slot : slots[soc_index]) {
      if ((slot.at - at).cwiseAbs().maxCoeff() <= 3e-3) {
        lin.a_in.row(slot.row) = row.transpose();
        lin.b_in(slot.row) = rhs;
        slot.at = at;
        return;
      }
    }
    lin.a_in.conservativeResize(lin.a_in.rows() + 1, program.n);
    lin.b_in.conservativeResize(lin.b_in.size() + 1);
    lin.a_in.row(lin.a_in.rows() - 1) = row.transpose();
    lin.b_in(lin.b_in.size() - 1) = rhs;
    slots[soc_index].push_back({at, lin.a_in.rows() - 1});
  };

  auto append_cuts = [&](const Vector& at) {
    for (size_t r = 0; r < program.soc.size(); ++r) {
      const SocConstraint& s = program.soc[r];
      Vector yc = at;
      Vector u = s.f_mat * yc + s.f_vec;
      double norm = u.norm();
      if (norm < 1e-12) {
        // Nondifferentiable point; nudge the first coordinate (the
        // interpolation variable in controller usage).
        yc(0) += 1e-9;
        u = s.f_mat * yc + s.f_vec;
        norm = u.norm();
      }
      if (norm < 1e-12) {
        // Norm term vanishes identically near yc: keep the affine part.
        place_cut(r, yc, -s.g_vec, s.h_scalar);
      } else {
        const Vector grad = s.f_mat.transpose() * u / norm;
        place_cut(r, yc, grad - s.g_vec, s.h_scalar - norm + grad.dot(yc));
      }
    }
  };

  bool converged = false;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    append_cuts(y);
    const SolveResult qp = solve_qp(lin);
    if (qp.status != SolveStatus::kOptimal) {
      // A near-feasible, near-optimal inner iterate is still a usable
      // linearization point; only a genuinely infeasible (or hopeless)
      // inner problem aborts the loop.
      if (qp.status == SolveStatus::kInfeasible || qp.kkt_residual > 1e-5) {
        result.y = y;
        result.objective_value = program.objective(y);
        result.status = qp.status;
        result.iterations = outer + 1;
        result.kkt_residual = qp.kkt_residual;
        return result;
      }
    }

    const double step = (qp.y - y).cwiseAbs().maxCoeff();
    const double dj = std::abs(program.objective(qp.y) - program.objective(y));
    y = qp.y;
    result.scp_history.push_back(
        {program.objective(y), program.soc_violation(y), step});
    result.kkt_residual = qp.kkt_residual;
    result.iterations = outer + 1;
    if (step <= opts.step_tol && dj <= opts.objective_tol &&
        program.soc_violation(y) <= opts.soc_post_tol) {
      converged = true;
      break;
    }
    if (program.soc_violation(y) <= 1e-2) {
      // Near-converged: try to land exactly via the active-set KKT system.
      if (const auto polished = kkt_polish(program, y)) {
        const double polish_step = (*polished - y).cwiseAbs().maxCoeff();
        y = *polished;
        result.scp_history.push_back(
            {program.objective(y), program.soc_violation(y), polish_step});
        converged = true;
        break;
      }
    }
  }

  result.y = y;
  result.objective_value = program.objective(y);
  const double viol = program.soc_violation(y);
  result.status = (converged && viol <= opts.soc_post_tol)
                      ? SolveStatus::kOptimal
                      : SolveStatus::kIterationLimit;
  return result;
}

}  // namespace smpc
