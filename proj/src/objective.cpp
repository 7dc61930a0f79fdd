#include "ppcm/objective.hpp"

#include <cmath>

#include "ppcm/errors.hpp"

namespace ppcm {

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd B, Eigen::VectorXd b)
    : B_(std::move(B)), b_(std::move(b)) {
  if (B_.rows() < 1 || B_.cols() < 1)
    throw InvalidDimensions("quadratic objective: empty matrix");
  if (B_.rows() != b_.size())
    throw ShapeMismatch("quadratic objective: B rows and b length differ");
}

double QuadraticObjective::value(const Eigen::VectorXd& x) const {
  if (x.size() != B_.cols())
    throw ShapeMismatch("objective value: argument dimension mismatch");
  return 0.5 * (B_ * x - b_).squaredNorm();
}

Eigen::VectorXd QuadraticObjective::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != B_.cols())
    throw ShapeMismatch("objective gradient: argument dimension mismatch");
  return B_.transpose() * (B_ * x - b_);
}

std::optional<double> QuadraticObjective::lipschitz_bound() const {
  const Eigen::Index n = B_.cols();
  // Index-dependent start so the iteration cannot begin orthogonal to the
  // dominant eigenvector of B^T B for structured matrices.
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();

  double lambda = 0.0;
  constexpr int kMaxIters = 10000;
  constexpr double kTol = 1e-8;
  for (int it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd w = B_.transpose() * (B_ * v);
    const double next = v.dot(w);  // Rayleigh quotient
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;  // B == 0
    v = w / norm;
    if (std::abs(next - lambda) <= kTol * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace ppcm
