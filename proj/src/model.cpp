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
#include "smpc/model.hpp"

#include <cmath>

namespace smpc {

LinearSystem::LinearSystem(Matrix a_in, Matrix b_in, SpdMatrix vw_in)
    : a(std::move(a_in)), b(std::move(b_in)), vw(std::move(vw_in)) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("LinearSystem: a must be square");
  }
  if (b.rows() != a.rows()) {
    throw std::invalid_argument("LinearSystem: b row count must match a");
  }
  if (vw.rows() != a.rows()) {
    throw std::invalid_argument("LinearSystem: vw dimension must match a");
  }
}

ChanceConstraint::ChanceConstraint(Vector c_in, double d_in, double rho_in,
                                   ConstraintKind k)
    : c(std::move(c_in)), d(d_in), rho(rho_in), kind(k) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument("ChanceConstraint: rho must be in (0,1)");
  }
  if (c.norm() == 0.0) {
    throw std::invalid_argument("ChanceConstraint: c must be nonzero");
  }
}

GainSet synthesize(const LinearSystem& sys, const SpdMatrix& q,
                   const SpdMatrix& r) {
  const LqrResult lqr = dare_lqr(sys.a, sys.b, q, r);
  GainSet gains;
  gains.k = lqr.k;
  gains.a_k = sys.a + sys.b * lqr.k;
  gains.q = q;
  gains.r = r;
  const Matrix stage = q.mat() + lqr.k.transpose() * r.mat() * lqr.k;
  // Cost-to-go solves a_k' p a_k + stage = p (transposed orientation);
  // the steady-state covariance propagates forward.
  gains.p = dlyap(gains.a_k.transpose(), SpdMatrix(stage));
  gains.ve_inf = dlyap(gains.a_k, sys.vw);
  gains.ell_ss = (stage * gains.ve_inf.mat()).trace();
  return gains;
}

VarianceProfile variance_profile(const GainSet& gains, const SpdMatrix& ve1_prev,
                                 int n) {
  if (n < 0) throw std::invalid_argument("variance_profile: n must be >= 0");
  if (ve1_prev.rows() != gains.a_k.rows()) {
    throw std::invalid_argument("variance_profile: dimension mismatch");
  }
  // vw is recovered from the fixed point vw = ve_inf - a_k ve_inf a_k^T,
  // so h[k] telescopes to ve_inf - a_k^k ve_inf (a_k^k)^T.
  VarianceProfile prof;
  prof.g.reserve(n + 1);
  prof.h.reserve(n + 1);
  const Matrix& ak = gains.a_k;
  Matrix g = ve1_prev.mat();
  Matrix ve_prop = gains.ve_inf.mat();  // a_k^k ve_inf (a_k^k)^T
  for (int k = 0; k <= n; ++k) {
    prof.g.push_back(0.5 * (g + g.transpose()));
    Matrix h = gains.ve_inf.mat() - ve_prop;
    prof.h.push_back(0.5 * (h + h.transpose()));
    if (k < n) {
      g = ak * g * ak.transpose();
      ve_prop = ak * ve_prop * ak.transpose();
    }
  }
  return prof;
}

std::pair<Vector, SpdMatrix> interpolate_initial(const Vector& x_t,
                                                 const Vector& z1_prev,
                                                 const SpdMatrix& ve1_prev,
                                                 double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw OutOfRange("interpolate_initial: xi must be in [0,1]");
  }
  if (x_t.size() != z1_prev.size() || ve1_prev.rows() != x_t.size()) {
    throw std::invalid_argument("interpolate_initial: dimension mismatch");
  }
  Vector z0 = (1.0 - xi) * x_t + xi * z1_prev;
  SpdMatrix ve0(Matrix(xi * xi * ve1_prev.mat()));
  return {std::move(z0), std::move(ve0)};
}

namespace {

double directional_variance(const ChanceConstraint& con, const SpdMatrix& ve,
                            const Matrix& k) {
  double v;
  if (con.kind == ConstraintKind::kState) {
    if (con.c.size() != ve.rows()) {
      throw std::invalid_argument("tighten: state constraint dimension mismatch");
    }
    v = con.c.dot(ve.mat() * con.c);
  } else {
    if (con.c.size() != k.rows()) {
      throw std::invalid_argument("tighten: input constraint dimension mismatch");
    }
    const Vector kc = k.transpose() * con.c;
    v = kc.dot(ve.mat() * kc);
  }
  if (v < -1e-12) {
    throw NegativeVariance("tighten: c^T V c is negative");
  }
  return std::max(v, 0.0);
}

}  // namespace

double tighten_gaussian(const ChanceConstraint& con, const SpdMatrix& ve,
                        const Matrix& k) {
  const double v = directional_variance(con, ve, k);
  return std::sqrt(v) * std_normal_quantile(con.rho);
}

double tighten_concentration(const ChanceConstraint& con, const SpdMatrix& ve,
                             const Matrix& k, ConcentrationKind coeff_kind) {
  double kappa;
  if (coeff_kind == ConcentrationKind::kCantelli) {
    if (!(con.rho > 0.5)) {
      throw OutOfDomain("tighten_concentration: cantelli requires rho > 0.5");
    }
    kappa = std::sqrt(con.rho / (1.0 - con.rho));
  } else {
    if (!(con.rho >= 5.0 / 6.0)) {
      throw OutOfDomain("tighten_concentration: unimodal requires rho >= 5/6");
    }
    kappa = std::sqrt(2.0 / (9.0 * (1.0 - con.rho)));
  }
  const double v = directional_variance(con, ve, k);
  return std::sqrt(v) * kappa;
}

double tightening_coefficient(Tightening kind, double rho) {
  switch (kind) {
    case Tightening::kGaussian:
      return std_normal_quantile(rho);
    case Tightening::kCantelli:
      if (!(rho > 0.5)) {
        throw OutOfDomain("tightening_coefficient: cantelli requires rho > 0.5");
      }
      return std::sqrt(rho / (1.0 - rho));
    case Tightening::kUnimodal:
      if (!(rho >= 5.0 / 6.0)) {
        throw OutOfDomain(
            "tightening_coefficient: unimodal requires rho >= 5/6");
      }
      return std::sqrt(2.0 / (9.0 * (1.0 - rho)));
  }
  throw std::logic_error("tightening_coefficient: unknown kind");
}

double tighten(const ChanceConstraint& con, const SpdMatrix& ve, const Matrix& k,
               Tightening kind) {
  const double v = directional_variance(con, ve, k);
  return std::sqrt(v) * tightening_coefficient(kind, con.rho);
}

}  // namespace smpc
