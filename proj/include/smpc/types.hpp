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
#ifndef SMPC_TYPES_HPP_
#define SMPC_TYPES_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace smpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a matrix expected to be positive definite has a
/// nonpositive Cholesky pivot. `pivot` is the offending index.
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(int pivot_index)
      : std::runtime_error("matrix not positive definite (pivot " +
                           std::to_string(pivot_index) + ")"),
        pivot(pivot_index) {}
  int pivot;
};

struct Unstable : std::runtime_error {
  explicit Unstable(double rho)
      : std::runtime_error("closed-loop matrix is not Schur stable "
                           "(spectral radius " + std::to_string(rho) + ")"),
        spectral_radius(rho) {}
  double spectral_radius;
};

struct SolveFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
  explicit NoConvergence(long iters)
      : std::runtime_error("iteration did not converge within " +
                           std::to_string(iters) + " iterations"),
        iterations(iters) {}
  long iterations;
};

struct OutOfDomain : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NegativeVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyTightening : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IterationLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyCondition : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleAtStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Square matrix validated to be symmetric (1e-12 relative tolerance) and
/// symmetrized on construction. Positive definiteness is checked where it
/// is actually needed, i.e. when a Cholesky factor is requested.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("SpdMatrix: matrix must be square");
    }
    const double scale = m.norm();
    const double asym = (m - m.transpose()).norm();
    if (asym > 1e-12 * std::max(1.0, scale)) {
      throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SpdMatrix Identity(Eigen::Index n) {
    return SpdMatrix(Matrix::Identity(n, n));
  }
  static SpdMatrix Zero(Eigen::Index n) {
    return SpdMatrix(Matrix::Zero(n, n));
  }

  const Matrix& mat() const { return m_; }
  Eigen::Index rows() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

}  // namespace smpc

#endif  // SMPC_TYPES_HPP_
