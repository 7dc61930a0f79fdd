#include "ppcm/convex_set.hpp"

#include "ppcm/errors.hpp"

namespace ppcm {

namespace {

void check_dim(const ConvexSet& s, const Eigen::VectorXd& v, const char* op) {
  if (v.size() != dimension(s))
    throw ShapeMismatch(std::string(op) + ": vector dimension does not match set");
}

}  // namespace

int dimension(const ConvexSet& s) {
  return std::visit(
      [](const auto& set) -> int {
        using T = std::decay_t<decltype(set)>;
        if constexpr (std::is_same_v<T, WholeSpace>) return set.dim;
        if constexpr (std::is_same_v<T, Box>) return static_cast<int>(set.lower.size());
        if constexpr (std::is_same_v<T, Ball>) return static_cast<int>(set.center.size());
        if constexpr (std::is_same_v<T, NonnegOrthant>) return set.dim;
        if constexpr (std::is_same_v<T, Halfspace>) return static_cast<int>(set.normal.size());
      },
      s);
}

void validate_set(const ConvexSet& s) {
  if (dimension(s) < 1) throw InvalidDimensions("convex set: dimension must be >= 1");
  if (const auto* box = std::get_if<Box>(&s)) {
    if (box->lower.size() != box->upper.size())
      throw InvalidDimensions("box: bound dimensions differ");
    if ((box->lower.array() > box->upper.array()).any())
      throw InvalidDimensions("box: lower bound exceeds upper bound");
  } else if (const auto* ball = std::get_if<Ball>(&s)) {
    if (!(ball->radius > 0.0)) throw InvalidDimensions("ball: radius must be positive");
  } else if (const auto* hs = std::get_if<Halfspace>(&s)) {
    if (!(hs->normal.norm() > 0.0)) throw InvalidDimensions("halfspace: zero normal");
  }
}

Eigen::VectorXd project(const ConvexSet& s, const Eigen::VectorXd& v) {
  check_dim(s, v, "project");
  return std::visit(
      [&](const auto& set) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(set)>;
        if constexpr (std::is_same_v<T, WholeSpace>) {
          return v;
        } else if constexpr (std::is_same_v<T, Box>) {
          return v.cwiseMax(set.lower).cwiseMin(set.upper);
        } else if constexpr (std::is_same_v<T, Ball>) {
          const Eigen::VectorXd d = v - set.center;
          const double dist = d.norm();
          if (dist <= set.radius) return v;  // covers v == center
          return set.center + (set.radius / dist) * d;
        } else if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return v.cwiseMax(0.0);
        } else {
          const double slack = set.normal.dot(v) - set.offset;
          if (slack <= 0.0) return v;
          return v - (slack / set.normal.squaredNorm()) * set.normal;
        }
      },
      s);
}

bool contains(const ConvexSet& s, const Eigen::VectorXd& v, double tol) {
  check_dim(s, v, "contains");
  return std::visit(
      [&](const auto& set) -> bool {
        using T = std::decay_t<decltype(set)>;
        if constexpr (std::is_same_v<T, WholeSpace>) {
          return true;
        } else if constexpr (std::is_same_v<T, Box>) {
          return (v.array() >= set.lower.array() - tol).all() &&
                 (v.array() <= set.upper.array() + tol).all();
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (v - set.center).norm() <= set.radius + tol;
        } else if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return (v.array() >= -tol).all();
        } else {
          return set.normal.dot(v) <= set.offset + tol;
        }
      },
      s);
}

}  // namespace ppcm
