#pragma once

#include <Eigen/Dense>
#include <variant>

namespace ppcm {

// Closed convex constraint sets with cheap closed-form projections.

struct WholeSpace {
  int dim = 0;
};

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct Ball {
  Eigen::VectorXd center;
  double radius = 1.0;
};

struct NonnegOrthant {
  int dim = 0;
};

// { x : normal . x <= offset }
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

using ConvexSet = std::variant<WholeSpace, Box, Ball, NonnegOrthant, Halfspace>;

int dimension(const ConvexSet& s);

/// Throws InvalidDimensions when a variant violates its structural
/// invariants (box bounds crossed, nonpositive radius, zero normal).
void validate_set(const ConvexSet& s);

/// Euclidean projection: the unique nearest point of the set.
Eigen::VectorXd project(const ConvexSet& s, const Eigen::VectorXd& v);

/// True iff v violates the defining inequalities by at most tol.
bool contains(const ConvexSet& s, const Eigen::VectorXd& v, double tol);

}  // namespace ppcm
