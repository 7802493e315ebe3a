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
#include "smpc/numkernel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace smpc {

Matrix cholesky(const SpdMatrix& m) {
  const Eigen::Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (diag <= 0.0) throw NotPositiveDefinite(static_cast<int>(j));
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

double spectral_radius(const Matrix& a) {
  // Dense eigensolve; matrices here are tiny and often have complex
  // eigenvalue pairs, where plain power iteration stalls.
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SpdMatrix dlyap(const Matrix& a_cl, const SpdMatrix& q) {
  if (a_cl.rows() != a_cl.cols() || a_cl.rows() != q.rows()) {
    throw std::invalid_argument("dlyap: dimension mismatch");
  }
  const double rho = spectral_radius(a_cl);
  if (!(rho < 1.0 - 1e-9)) throw Unstable(rho);

  const Eigen::Index n = a_cl.rows();
  Matrix kron = Matrix::Identity(n * n, n * n);
  // kron = I - A (x) A, columnwise vectorization convention.
  for (Eigen::Index ci = 0; ci < n; ++ci) {
    for (Eigen::Index cj = 0; cj < n; ++cj) {
      for (Eigen::Index ri = 0; ri < n; ++ri) {
        for (Eigen::Index rj = 0; rj < n; ++rj) {
          kron(ci * n + cj, ri * n + rj) -= a_cl(ci, ri) * a_cl(cj, rj);
        }
      }
    }
  }
  Eigen::FullPivLU<Matrix> lu(kron);
  if (!lu.isInvertible()) {
    throw SolveFailed("dlyap: Kronecker system is singular");
  }
  Vector vec_q(n * n);
  for (Eigen::Index c = 0; c < n; ++c) vec_q.segment(c * n, n) = q.mat().col(c);
  const Vector vec_p = lu.solve(vec_q);
  Matrix p(n, n);
  for (Eigen::Index c = 0; c < n; ++c) p.col(c) = vec_p.segment(c * n, n);
  p = 0.5 * (p + p.transpose()).eval();
  return SpdMatrix(p);
}

LqrResult dare_lqr(const Matrix& a, const Matrix& b, const SpdMatrix& q,
                   const SpdMatrix& r) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || q.rows() != a.rows() ||
      r.rows() != b.cols()) {
    throw std::invalid_argument("dare_lqr: dimension mismatch");
  }
  const long budget = 100000;
  Matrix p = q.mat();
  long it = 0;
  for (; it < budget; ++it) {
    const Matrix btp = b.transpose() * p;
    const Matrix gram = r.mat() + btp * b;
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NoConvergence(it);
    const Matrix gain = ldlt.solve(btp * a);  // (r + b'pb)^{-1} b'pa
    Matrix p_next =
        q.mat() + a.transpose() * p * a - a.transpose() * btp.transpose() * gain;
    p_next = 0.5 * (p_next + p_next.transpose()).eval();
    const double change = (p_next - p).norm();
    p = p_next;
    if (change <= 1e-12 * std::max(1.0, p.norm())) break;
  }
  if (it >= budget) throw NoConvergence(budget);

  const Matrix btp = b.transpose() * p;
  const Matrix gram = r.mat() + btp * b;
  LqrResult out;
  out.k = -gram.ldlt().solve(btp * a);
  out.p = SpdMatrix(p);
  out.iterations = it + 1;
  const double rho = spectral_radius(a + b * out.k);
  if (!(rho < 1.0)) throw Unstable(rho);
  return out;
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double std_normal_pdf(double x) {
  static const double kInvSqrt2Pi = 0.3989422804014326779;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

namespace {

// Acklam-style rational approximation, |error| < 1.2e-9 before refinement.
double quantile_initial_guess(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double u = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double u = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  const double u = p - 0.5;
  const double t = u * u;
  return (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
         (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
}

}  // namespace

double std_normal_quantile(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw OutOfDomain("std_normal_quantile: rho must be in (0,1)");
  }
  double x = quantile_initial_guess(rho);
  for (int i = 0; i < 2; ++i) {
    const double err = std_normal_cdf(x) - rho;
    const double dens = std_normal_pdf(x);
    if (dens <= 0.0) break;
    // Halley-corrected Newton step; helps in the far tails.
    const double u = err / dens;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

namespace {

// Regularized lower incomplete gamma P(s, x), series + continued fraction.
double gamma_p(double s, double x) {
  if (x <= 0.0) return 0.0;
  const double lg = std::lgamma(s);
  if (x < s + 1.0) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (s + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x) - lg);
  }
  // Lentz continued fraction for Q(s,x).
  double b = x + 1.0 - s;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + s * std::log(x) - lg) * h;
  return 1.0 - q;
}

}  // namespace

double chi_square_quantile(double level, int dof) {
  if (!(level > 0.0 && level < 1.0) || dof < 1) {
    throw OutOfDomain("chi_square_quantile: level in (0,1), dof >= 1");
  }
  if (dof == 2) return -2.0 * std::log(1.0 - level);
  // Bisection on the CDF; bracket grows until it covers `level`.
  double lo = 0.0, hi = 2.0 * dof;
  while (gamma_p(0.5 * dof, 0.5 * hi) < level) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(0.5 * dof, 0.5 * mid) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

bool is_psd(const Matrix& m, double reg) {
  const Matrix s =
      0.5 * (m + m.transpose()) + reg * Matrix::Identity(m.rows(), m.cols());
  Eigen::LLT<Matrix> llt(s);
  return llt.info() == Eigen::Success;
}

}  // namespace smpc
