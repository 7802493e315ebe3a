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
#include "smpc/controller.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "smpc/numkernel.hpp"

namespace smpc {

void OcpSpec::validate() const {
  if (n < 1) throw std::invalid_argument("OcpSpec: horizon must be >= 1");
  if (z_f.dim() != sys.nx()) {
    throw std::invalid_argument("OcpSpec: terminal set dimension mismatch");
  }
  for (const auto& con : constraints) {
    if (tightening == Tightening::kGaussian && con.rho < 0.5) {
      throw OutOfDomain(
          "OcpSpec: rho < 0.5 breaks the convex solve path (the tightening "
          "term is no longer a norm); rejected");
    }
    const Eigen::Index want =
        con.kind == ConstraintKind::kState ? sys.nx() : sys.nu();
    if (con.c.size() != want) {
      throw std::invalid_argument("OcpSpec: constraint dimension mismatch");
    }
  }
}

ControllerState initial_controller_state(const OcpSpec& spec, const Vector& x0) {
  ControllerState st;
  st.z1_prev = x0;
  st.ve1_prev = spec.gains.ve_inf;
  st.t = 0;
  return st;
}

Vector OcpAssembly::state_at(int k, const Vector& y) const {
  return z_base.segment(k * nx, nx) + z_map.middleRows(k * nx, nx) * y;
}

Vector OcpAssembly::input_at(int k, const Vector& y) const {
  return y.segment(1 + k * nu, nu);
}

namespace {

double clamped(double v) { return std::max(v, 0.0); }

}  // namespace

OcpAssembly assemble_ocp(const OcpSpec& spec, const Vector& x_t,
                         const ControllerState& state) {
  spec.validate();
  const int n = spec.n;
  const Eigen::Index nx = spec.sys.nx();
  const Eigen::Index nu = spec.sys.nu();
  const int nvar = 1 + n * static_cast<int>(nu);
  if (x_t.size() != nx || state.z1_prev.size() != nx) {
    throw std::invalid_argument("assemble_ocp: state dimension mismatch");
  }

  OcpAssembly out;
  out.n = n;
  out.nx = nx;
  out.nu = nu;

  // Nominal trajectory as affine functions of y = (xi, v).
  out.z_base.resize((n + 1) * nx);
  out.z_map = Matrix::Zero((n + 1) * nx, nvar);
  out.z_base.head(nx) = x_t;
  out.z_map.block(0, 0, nx, 1) = state.z1_prev - x_t;  // d z0 / d xi
  for (int k = 0; k < n; ++k) {
    out.z_base.segment((k + 1) * nx, nx) =
        spec.sys.a * out.z_base.segment(k * nx, nx);
    out.z_map.middleRows((k + 1) * nx, nx) =
        spec.sys.a * out.z_map.middleRows(k * nx, nx);
    out.z_map.block((k + 1) * nx, 1 + k * nu, nx, nu) += spec.sys.b;
  }

  // Error variance profile Ve_k = xi^2 g[k] + h[k].
  if (spec.variance_mode == VarianceMode::kInterpolated) {
    out.prof = variance_profile(spec.gains, state.ve1_prev, n);
  } else {
    out.prof.g.assign(n + 1, Matrix::Zero(nx, nx));
    out.prof.h.assign(n + 1, spec.gains.ve_inf.mat());
  }

  // Objective: sum_k ||z_k||_Q^2 + ||v_k||_R^2 + tr(W Ve_k) + beta + terminal.
  ConvexProgram& prog = out.program;
  prog.n = nvar;
  Matrix hess = Matrix::Zero(nvar, nvar);
  Vector grad = Vector::Zero(nvar);
  double constant = 0.0;
  const Matrix w = spec.gains.stage_weight();

  auto add_quadratic = [&](const Matrix& weight, int k) {
    const auto m = out.z_map.middleRows(k * nx, nx);
    const Vector base = out.z_base.segment(k * nx, nx);
    hess.noalias() += 2.0 * m.transpose() * weight * m;
    grad.noalias() += 2.0 * m.transpose() * weight * base;
    constant += base.dot(weight * base);
  };

  for (int k = 0; k < n; ++k) {
    add_quadratic(spec.gains.q.mat(), k);
    hess.block(1 + k * nu, 1 + k * nu, nu, nu) += 2.0 * spec.gains.r.mat();
  }
  add_quadratic(spec.gains.p.mat(), n);  // ||z_N||_P^2

  // xi^2 coefficients: variance traces, initial cost, terminal trace.
  double xi2_coeff = 0.0;
  double const_trace = 0.0;
  if (spec.variance_mode == VarianceMode::kInterpolated) {
    for (int k = 0; k < n; ++k) {
      xi2_coeff += (w * out.prof.g[k]).trace();
      const_trace += (w * out.prof.h[k]).trace();
    }
    xi2_coeff += (w * dlyap(spec.gains.a_k, SpdMatrix(out.prof.g[n])).mat())
                     .trace();
    const_trace += (w * dlyap(spec.gains.a_k, SpdMatrix(out.prof.h[n])).mat())
                       .trace();
  }
  const Vector init_err = x_t - state.z1_prev;
  xi2_coeff += init_err.dot(spec.gains.p.mat() * init_err);  // beta_t
  hess(0, 0) += 2.0 * xi2_coeff;
  constant += const_trace;

  prog.hessian = 0.5 * (hess + hess.transpose());
  prog.gradient = grad;
  prog.constant = constant;

  // Tightened chance constraints for k = 0..n-1.
  const double inf = ConvexProgram::kInf;
  std::vector<Vector> lin_rows;
  std::vector<double> lin_rhs;
  for (const auto& con : spec.constraints) {
    const double kappa = tightening_coefficient(spec.tightening, con.rho);
    const bool on_state = con.kind == ConstraintKind::kState;
    const Vector dir = on_state
                           ? con.c
                           : Vector(spec.gains.k.transpose() * con.c);
    for (int k = 0; k < n; ++k) {
      const double alpha = clamped(dir.dot(out.prof.g[k] * dir));
      const double beta = clamped(dir.dot(out.prof.h[k] * dir));
      Vector row = Vector::Zero(nvar);
      if (on_state) {
        row = out.z_map.middleRows(k * nx, nx).transpose() * con.c;
      } else {
        row.segment(1 + k * nu, nu) = con.c;
      }
      const double affine =
          on_state ? con.c.dot(out.z_base.segment(k * nx, nx)) : 0.0;
      if (alpha <= 1e-14) {
        // Margin is constant in xi.
        lin_rows.push_back(row);
        lin_rhs.push_back(con.d - affine - kappa * std::sqrt(beta));
      } else if (beta <= 1e-14) {
        // Margin kappa*sqrt(alpha)*xi, linear since xi >= 0.
        row(0) += kappa * std::sqrt(alpha);
        lin_rows.push_back(row);
        lin_rhs.push_back(con.d - affine);
      } else {
        SocConstraint soc;
        soc.f_mat = Matrix::Zero(2, nvar);
        soc.f_mat(0, 0) = kappa * std::sqrt(alpha);
        soc.f_vec = Vector::Zero(2);
        soc.f_vec(1) = kappa * std::sqrt(beta);
        soc.g_vec = -row;
        soc.h_scalar = con.d - affine;
        prog.soc.push_back(std::move(soc));
      }
    }
  }

  // Terminal set rows on z_N.
  for (Eigen::Index r = 0; r < spec.z_f.rows(); ++r) {
    const Vector c = spec.z_f.c_mat.row(r).transpose();
    lin_rows.push_back(out.z_map.middleRows(n * nx, nx).transpose() * c);
    lin_rhs.push_back(spec.z_f.d_vec(r) -
                      c.dot(out.z_base.segment(n * nx, nx)));
  }

  prog.a_in.resize(static_cast<Eigen::Index>(lin_rows.size()), nvar);
  prog.b_in.resize(static_cast<Eigen::Index>(lin_rows.size()));
  for (size_t i = 0; i < lin_rows.size(); ++i) {
    prog.a_in.row(static_cast<Eigen::Index>(i)) = lin_rows[i];
    prog.b_in(static_cast<Eigen::Index>(i)) = lin_rhs[i];
  }

  prog.lb = Vector::Constant(nvar, -inf);
  prog.ub = Vector::Constant(nvar, inf);
  prog.lb(0) = 0.0;
  prog.ub(0) = 1.0;
  return out;
}

ConvexProgram build_ocp(const OcpSpec& spec, const Vector& x_t,
                        const ControllerState& state) {
  return assemble_ocp(spec, x_t, state).program;
}

ConvexProgram restrict_xi(const ConvexProgram& program, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw OutOfRange("restrict_xi: xi must be in [0,1]");
  }
  ConvexProgram out = program;
  out.soc.clear();
  const Eigen::Index base = program.a_in.rows();
  out.a_in.conservativeResize(base + static_cast<Eigen::Index>(program.soc.size()),
                              program.n);
  out.b_in.conservativeResize(base + static_cast<Eigen::Index>(program.soc.size()));
  Vector probe = Vector::Zero(program.n);
  probe(0) = xi;
  for (size_t i = 0; i < program.soc.size(); ++i) {
    const SocConstraint& s = program.soc[i];
    // Valid only when the norm term depends on xi alone.
    if (s.f_mat.rightCols(program.n - 1).norm() != 0.0) {
      throw std::invalid_argument(
          "restrict_xi: SOC row depends on more than the interpolation "
          "variable");
    }
    const double margin = (s.f_mat * probe + s.f_vec).norm();
    out.a_in.row(base + static_cast<Eigen::Index>(i)) = -s.g_vec.transpose();
    out.b_in(base + static_cast<Eigen::Index>(i)) = s.h_scalar - margin;
  }
  out.lb(0) = xi;
  out.ub(0) = xi;
  return out;
}

double initial_cost_beta(const Vector& x_t, const Vector& z1_prev,
                         const SpdMatrix& p, double xi) {
  const Vector e = x_t - z1_prev;
  return xi * xi * e.dot(p.mat() * e);
}

double terminal_cost(const Vector& z_n, const SpdMatrix& ve_n,
                     const GainSet& gains) {
  const double nominal = z_n.dot(gains.p.mat() * z_n);
  const SpdMatrix sigma = dlyap(gains.a_k, ve_n);
  return nominal + (gains.stage_weight() * sigma.mat()).trace();
}

Vector shifted_candidate(const OcpSpec& spec, const ControllerState& state) {
  if (!state.last_solution) {
    throw std::logic_error("shifted_candidate: no previous solution");
  }
  const OcpSolution& prev = *state.last_solution;
  const int n = spec.n;
  const Eigen::Index nu = spec.sys.nu();
  Vector y = Vector::Zero(1 + n * nu);
  y(0) = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    y.segment(1 + k * nu, nu) = prev.v[k + 1];
  }
  y.segment(1 + (n - 1) * nu, nu) = spec.gains.k * prev.z[n];
  return y;
}

namespace {

// Smallest slack over all stage chance rows, margins evaluated exactly.
double min_chance_slack(const OcpSpec& spec, const OcpAssembly& asmb,
                        const Vector& y, double xi) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& con : spec.constraints) {
    const double kappa = tightening_coefficient(spec.tightening, con.rho);
    const bool on_state = con.kind == ConstraintKind::kState;
    const Vector dir =
        on_state ? con.c : Vector(spec.gains.k.transpose() * con.c);
    for (int k = 0; k < spec.n; ++k) {
      const double var =
          clamped(dir.dot((xi * xi * asmb.prof.g[k] + asmb.prof.h[k]) * dir));
      const double margin = kappa * std::sqrt(var);
      const double lhs = on_state ? con.c.dot(asmb.state_at(k, y))
                                  : con.c.dot(asmb.input_at(k, y));
      worst = std::min(worst, con.d - margin - lhs);
    }
  }
  return worst;
}

OcpSolution decode_solution(const OcpSpec& spec, const OcpAssembly& asmb,
                            const SolveResult& res) {
  OcpSolution sol;
  const Vector& y = res.y;
  sol.xi = std::min(1.0, std::max(0.0, y(0)));
  for (int k = 0; k < spec.n; ++k) sol.v.push_back(asmb.input_at(k, y));
  for (int k = 0; k <= spec.n; ++k) sol.z.push_back(asmb.state_at(k, y));
  for (int k = 0; k <= spec.n; ++k) sol.ve.push_back(asmb.prof.ve(k, sol.xi));
  sol.sigma_n = dlyap(spec.gains.a_k, SpdMatrix(sol.ve.back()));
  sol.cost = res.objective_value;
  sol.min_tightened_slack = min_chance_slack(spec, asmb, y, sol.xi);
  sol.solver_stats.scp_iterations = res.iterations;
  sol.solver_stats.kkt_residual = res.kkt_residual;
  sol.solver_stats.soc_residual = asmb.program.soc_violation(y);
  sol.solver_stats.history = res.scp_history;
  return sol;
}

void check_solution(const OcpSpec& spec, const ControllerState& state,
                    const OcpSolution& sol, const ConvexProgram& program,
                    const SolveResult& res) {
  if (sol.min_tightened_slack < -1e-7) {
    throw SolverFailure("tightened constraint violated at solution (slack " +
                        std::to_string(sol.min_tightened_slack) + ")\n" +
                        dump_problem(program, res));
  }
  if (!contains(spec.z_f, sol.z.back(), 1e-9)) {
    throw SolverFailure("terminal state escaped the terminal set\n" +
                        dump_problem(program, res));
  }
  if (spec.variance_mode == VarianceMode::kInterpolated) {
    // Ve0(t) <= Ve1(t-1) <= Ve_inf along the closed loop.
    const Matrix ve0 = sol.ve.front();
    if (!is_psd(state.ve1_prev.mat() - ve0) ||
        !is_psd(spec.gains.ve_inf.mat() - state.ve1_prev.mat(), 1e-9)) {
      throw SolverFailure("variance chain Ve0 <= Ve1_prev <= Ve_inf violated\n" +
                          dump_problem(program, res));
    }
  }
}

// Feasible point with the interpolation variable pinned; the feasible
// xi-projection is an interval, so a coarse-then-fine scan finds a point
// whenever one exists at grid resolution. The carried prediction places
// xi = 1 exactly on the previous solution's constraint boundary, so the
// restricted rows get a 1e-9 cushion against accumulated solver
// tolerance; the subsequent full solve still enforces the true rows.
SolveResult pinned_xi_initializer(const ConvexProgram& program) {
  auto attempt = [&](double xi0) {
    ConvexProgram restricted = restrict_xi(program, xi0);
    restricted.b_in.array() += 1e-9;
    return solve_qp(restricted);
  };
  SolveResult init;
  for (double xi0 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    init = attempt(xi0);
    if (init.status != SolveStatus::kInfeasible) return init;
  }
  for (int i = 1; i < 16; i += 2) {
    init = attempt(i / 16.0);
    if (init.status != SolveStatus::kInfeasible) return init;
  }
  init.status = SolveStatus::kInfeasible;
  return init;
}

StepResult run_step(const OcpSpec& spec, const ControllerState& state,
                    const Vector& x_t) {
  const OcpAssembly asmb = assemble_ocp(spec, x_t, state);

  SolveResult res;
  if (asmb.program.soc.empty()) {
    // Linear constraints only (icSMPC margins, or no constraints at all).
    res = solve_qp(asmb.program);
  } else {
    Vector y_init;
    bool have_init = false;
    if (state.t > 0 && state.last_solution) {
      const Vector cand = shifted_candidate(spec, state);
      if (asmb.program.violation(cand) <= 1e-9) {
        y_init = cand;
        have_init = true;
      }
    }
    if (!have_init) {
      // At the Thm-1 initialization the nominal path does not depend on
      // xi and margins grow with it, so xi = 0 is the widest restriction;
      // later steps land here only when the shifted candidate is not
      // usable (possible with a non-invariant terminal set).
      const SolveResult init = pinned_xi_initializer(asmb.program);
      if (init.status == SolveStatus::kInfeasible) {
        if (state.t == 0) {
          throw InfeasibleAtStart(
              "OCP infeasible at t=0 for the given initial state");
        }
        throw SolverFailure("OCP lost feasibility at t=" +
                            std::to_string(state.t) + "\n" +
                            dump_problem(asmb.program, init));
      }
      if (init.status != SolveStatus::kOptimal) {
        throw SolverFailure("initializer QP failed\n" +
                            dump_problem(asmb.program, init));
      }
      y_init = init.y;
    }
    res = solve_scp(asmb.program, y_init);
  }

  if (res.status != SolveStatus::kOptimal) {
    if (state.t == 0 && res.status == SolveStatus::kInfeasible) {
      throw InfeasibleAtStart("OCP infeasible at t=0");
    }
    throw SolverFailure(std::string("OCP solve failed at t=") +
                        std::to_string(state.t) + " (" +
                        to_string(res.status) + ")\n" +
                        dump_problem(asmb.program, res));
  }

  OcpSolution sol = decode_solution(spec, asmb, res);
  check_solution(spec, state, sol, asmb.program, res);

  StepResult step;
  step.u = sol.v[0] + spec.gains.k * (x_t - sol.z[0]);
  step.next.z1_prev = sol.z[1];
  step.next.ve1_prev = SpdMatrix(sol.ve[1]);
  step.next.t = state.t + 1;
  step.sol = std::move(sol);
  step.next.last_solution = step.sol;
  return step;
}

}  // namespace

StepResult step_ivsmpc(const OcpSpec& spec, const ControllerState& state,
                       const Vector& x_t) {
  if (spec.variance_mode != VarianceMode::kInterpolated) {
    throw std::invalid_argument("step_ivsmpc: spec.variance_mode mismatch");
  }
  return run_step(spec, state, x_t);
}

StepResult step_icsmpc(const OcpSpec& spec, const ControllerState& state,
                       const Vector& x_t) {
  if (spec.variance_mode != VarianceMode::kFixed) {
    throw std::invalid_argument("step_icsmpc: spec.variance_mode mismatch");
  }
  return run_step(spec, state, x_t);
}

Vector step_lqr(const GainSet& gains, const Vector& x_t) {
  return gains.k * x_t;
}

std::string dump_problem(const ConvexProgram& program,
                         const SolveResult& result) {
  std::ostringstream os;
  auto emit_matrix = [&os](const char* name, const Matrix& m) {
    os << name << " (" << m.rows() << "x" << m.cols() << "):\n";
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
        os << buf << (j + 1 < m.cols() ? " " : "");
      }
      os << "\n";
    }
  };
  os << "=== OCP PROBLEM DUMP ===\n";
  os << "status: " << to_string(result.status)
     << "  iterations: " << result.iterations
     << "  kkt_residual: " << result.kkt_residual << "\n";
  emit_matrix("hessian", program.hessian);
  emit_matrix("gradient", Matrix(program.gradient));
  emit_matrix("a_in", program.a_in);
  emit_matrix("b_in", Matrix(program.b_in));
  for (size_t i = 0; i < program.soc.size(); ++i) {
    os << "soc[" << i << "]\n";
    emit_matrix("  f_mat", program.soc[i].f_mat);
    emit_matrix("  f_vec", Matrix(program.soc[i].f_vec));
    emit_matrix("  g_vec", Matrix(program.soc[i].g_vec));
    os << "  h_scalar: " << program.soc[i].h_scalar << "\n";
  }
  if (result.y.size() > 0) emit_matrix("y", Matrix(result.y));
  os << "iterate history (objective, soc_violation, step):\n";
  for (const auto& it : result.scp_history) {
    os << "  " << it.objective << " " << it.soc_violation << " "
       << it.step_norm << "\n";
  }
  os << "=== END DUMP ===\n";
  return os.str();
}

}  // namespace smpc
