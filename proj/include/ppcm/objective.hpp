#pragma once

#include <Eigen/Dense>
#include <optional>

namespace ppcm {

/// Differentiable convex objective owned by one agent. Implementations must
/// be immutable after construction so they can be shared across agents.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  /// Global Lipschitz constant of the gradient, when one is known.
  virtual std::optional<double> lipschitz_bound() const { return std::nullopt; }
};

/// f(x) = 1/2 ||Bx - b||^2 with gradient B^T(Bx - b).
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Eigen::MatrixXd B, Eigen::VectorXd b);

  int dim() const override { return static_cast<int>(B_.cols()); }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;

  /// ||B^T B|| by power iteration on x -> B^T(Bx); tolerance 1e-8,
  /// at most 10000 iterations.
  std::optional<double> lipschitz_bound() const override;

  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::VectorXd& b() const { return b_; }

 private:
  Eigen::MatrixXd B_;
  Eigen::VectorXd b_;
};

}  // namespace ppcm
