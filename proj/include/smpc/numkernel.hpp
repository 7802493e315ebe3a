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
#ifndef SMPC_NUMKERNEL_HPP_
#define SMPC_NUMKERNEL_HPP_

#include <utility>

#include "smpc/types.hpp"

namespace smpc {

/// Lower-triangular L with L*L^T = m. Throws NotPositiveDefinite with the
/// index of the first nonpositive pivot.
Matrix cholesky(const SpdMatrix& m);

/// Spectral radius of a (possibly nonsymmetric) square matrix.
double spectral_radius(const Matrix& a);

/// Positive-semidefinite P solving a_cl * P * a_cl^T + q = P.
/// Solved through the Kronecker system (I - A (x) A) vec(P) = vec(Q);
/// the result is symmetrized. Throws Unstable when rho(a_cl) >= 1 - 1e-9
/// and SolveFailed when the Kronecker system is singular.
SpdMatrix dlyap(const Matrix& a_cl, const SpdMatrix& q);

struct LqrResult {
  Matrix k;       // u = k * x, n_u x n_x
  SpdMatrix p;    // Riccati cost-to-go
  long iterations = 0;
};

/// Discrete-time LQR synthesis by fixed-point Riccati value iteration
/// (relative-change stop 1e-12, budget 100000 iterations).
/// k = -(r + b^T p b)^{-1} b^T p a; a + b*k is Schur stable on success.
LqrResult dare_lqr(const Matrix& a, const Matrix& b, const SpdMatrix& q,
                   const SpdMatrix& r);

/// Standard normal CDF.
double std_normal_cdf(double x);

/// Standard normal density.
double std_normal_pdf(double x);

/// Inverse standard normal CDF for rho in (0,1). Rational initial guess
/// refined with Newton steps on the CDF; throws OutOfDomain otherwise.
double std_normal_quantile(double rho);

/// Chi-square quantile (inverse CDF) for `dof` degrees of freedom.
double chi_square_quantile(double level, int dof);

/// True when m - 0 is PSD in the Cholesky-of-(m + reg*I) sense.
bool is_psd(const Matrix& m, double reg = 1e-10);

}  // namespace smpc

#endif  // SMPC_NUMKERNEL_HPP_
