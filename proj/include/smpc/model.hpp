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
#ifndef SMPC_MODEL_HPP_
#define SMPC_MODEL_HPP_

#include <utility>
#include <vector>

#include "smpc/numkernel.hpp"
#include "smpc/types.hpp"

namespace smpc {

/// x(t+1) = a x(t) + b u(t) + w(t), w ~ N(0, vw).
struct LinearSystem {
  Matrix a;
  Matrix b;
  SpdMatrix vw;

  LinearSystem(Matrix a_in, Matrix b_in, SpdMatrix vw_in);

  Eigen::Index nx() const { return a.rows(); }
  Eigen::Index nu() const { return b.cols(); }
};

enum class ConstraintKind { kState, kInput };

/// P(c^T x <= d) >= rho (state kind) or P(c^T u <= d) >= rho (input kind).
struct ChanceConstraint {
  Vector c;
  double d = 0.0;
  double rho = 0.9;
  ConstraintKind kind = ConstraintKind::kState;

  ChanceConstraint(Vector c_in, double d_in, double rho_in, ConstraintKind k);
};

/// Prestabilizing LQR gain and the derived steady-state quantities.
struct GainSet {
  Matrix k;          // n_u x n_x
  Matrix a_k;        // a + b k
  SpdMatrix p;       // dlyap(a_k, q + k'rk)
  SpdMatrix ve_inf;  // dlyap(a_k, vw)
  double ell_ss = 0.0;
  SpdMatrix q;
  SpdMatrix r;

  /// q + k^T r k, the error-weighted stage cost matrix.
  Matrix stage_weight() const { return q.mat() + k.transpose() * r.mat() * k; }
};

GainSet synthesize(const LinearSystem& sys, const SpdMatrix& q,
                   const SpdMatrix& r);

/// Ve_k(xi) = xi^2 * g[k] + h[k] for k = 0..n along the prestabilized
/// error recursion started from Ve_0 = xi^2 * ve1_prev.
struct VarianceProfile {
  std::vector<Matrix> g;
  std::vector<Matrix> h;

  Matrix ve(int k, double xi) const { return xi * xi * g[k] + h[k]; }
};

VarianceProfile variance_profile(const GainSet& gains, const SpdMatrix& ve1_prev,
                                 int n);

/// Interpolated initialization: z0 = (1-xi) x_t + xi z1_prev,
/// ve0 = xi^2 ve1_prev. Throws OutOfRange for xi outside [0,1].
std::pair<Vector, SpdMatrix> interpolate_initial(const Vector& x_t,
                                                 const Vector& z1_prev,
                                                 const SpdMatrix& ve1_prev,
                                                 double xi);

enum class Tightening { kGaussian, kCantelli, kUnimodal };
enum class ConcentrationKind { kCantelli, kUnimodal };

/// Exact Gaussian tightening margin sqrt(c^T V c) * Phi^{-1}(rho) with
/// V = ve for state constraints and K ve K^T for input constraints.
double tighten_gaussian(const ChanceConstraint& con, const SpdMatrix& ve,
                        const Matrix& k);

/// Distribution-free margins sqrt(c^T V c) * kappa(rho):
/// cantelli kappa = sqrt(rho/(1-rho)) (rho > 1/2),
/// unimodal kappa = sqrt(2/(9(1-rho))) (rho >= 5/6).
double tighten_concentration(const ChanceConstraint& con, const SpdMatrix& ve,
                             const Matrix& k, ConcentrationKind coeff_kind);

/// kappa(rho) for the selected tightening family.
double tightening_coefficient(Tightening kind, double rho);

/// Margin for the selected family; dispatches on `kind`.
double tighten(const ChanceConstraint& con, const SpdMatrix& ve, const Matrix& k,
               Tightening kind);

}  // namespace smpc

#endif  // SMPC_MODEL_HPP_
