#include <doctest.h>

#include <random>

#include "ppcm/convex_set.hpp"
#include "ppcm/errors.hpp"
#include "ppcm/io.hpp"

using namespace ppcm;

namespace {

// Shared random machinery for the projection property checks: a point
// anywhere in space and a point guaranteed to lie inside the set.
struct SetSampler {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal;

  explicit SetSampler(std::uint64_t seed) : rng(seed), normal(0.0, 3.0) {}

  Eigen::VectorXd ambient(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    return v;
  }

  Eigen::VectorXd member(const ConvexSet& s) {
    // Projection of a random ambient point is always a member.
    return project(s, ambient(dimension(s)));
  }
};

std::vector<ConvexSet> sample_sets() {
  Eigen::VectorXd lo(3), hi(3), center(3), normal(3);
  lo << -1.0, 0.0, 2.0;
  hi << 1.0, 0.5, 2.0;  // one degenerate coordinate
  center << 1.0, -2.0, 0.5;
  normal << 1.0, -1.0, 2.0;
  return {WholeSpace{3}, Box{lo, hi}, Ball{center, 1.7}, NonnegOrthant{3},
          Halfspace{normal, 0.75}};
}

}  // namespace

TEST_CASE("projection examples") {
  SUBCASE("whole space is the identity") {
    Eigen::VectorXd v(4);
    v << 1, -2, 3, -4;
    CHECK((project(WholeSpace{4}, v) - v).norm() == 0.0);
  }
  SUBCASE("box clamps componentwise") {
    const ConvexSet s = Box{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
    Eigen::VectorXd v(2);
    v << 2.0, -1.0;
    const Eigen::VectorXd p = project(s, v);
    CHECK(p(0) == 1.0);
    CHECK(p(1) == 0.0);
  }
  SUBCASE("ball rescales radially") {
    const ConvexSet s = Ball{Eigen::VectorXd::Zero(2), 1.0};
    Eigen::VectorXd v(2);
    v << 3.0, 4.0;
    const Eigen::VectorXd p = project(s, v);
    CHECK(p(0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(p(1) == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("ball center maps to itself") {
    Eigen::VectorXd c(2);
    c << 5.0, -1.0;
    const ConvexSet s = Ball{c, 2.0};
    CHECK((project(s, c) - c).norm() == 0.0);
  }
  SUBCASE("halfspace subtracts the scaled normal") {
    Eigen::VectorXd a(2);
    a << 1.0, 0.0;
    const ConvexSet s = Halfspace{a, 0.0};
    Eigen::VectorXd v(2);
    v << 2.0, 5.0;
    const Eigen::VectorXd p = project(s, v);
    CHECK(p(0) == 0.0);
    CHECK(p(1) == 5.0);
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(project(WholeSpace{3}, Eigen::VectorXd::Zero(2)), ShapeMismatch);
    CHECK_THROWS_AS(contains(NonnegOrthant{3}, Eigen::VectorXd::Zero(2), 0.0),
                    ShapeMismatch);
  }
}

TEST_CASE("membership examples") {
  const ConvexSet box = Box{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
  Eigen::VectorXd mid(2);
  mid << 0.5, 0.5;
  CHECK(contains(box, mid, 0.0));

  const ConvexSet ball = Ball{Eigen::VectorXd::Zero(2), 1.0};
  Eigen::VectorXd outside(2);
  outside << 1.0 + 1e-6, 0.0;
  CHECK_FALSE(contains(ball, outside, 1e-12));

  Eigen::VectorXd near(2);
  near << -1e-10, 2.0;
  CHECK(contains(NonnegOrthant{2}, near, 1e-9));
}

TEST_CASE("projection laws hold for every variant") {
  SetSampler sampler(2024);
  for (const auto& s : sample_sets()) {
    const int dim = dimension(s);
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::VectorXd v = sampler.ambient(dim);
      const Eigen::VectorXd pv = project(s, v);

      // Obtuse-angle characterization against a member point.
      const Eigen::VectorXd u = sampler.member(s);
      CHECK((v - pv).dot(u - pv) <= 1e-10);

      // Idempotence and membership.
      CHECK((project(s, pv) - pv).norm() <= 1e-12);
      CHECK(contains(s, pv, 1e-9));

      // Non-expansiveness.
      const Eigen::VectorXd w = sampler.ambient(dim);
      CHECK((pv - project(s, w)).norm() <= (v - w).norm() + 1e-12);
    }
  }
}

TEST_CASE("structural validation") {
  Eigen::VectorXd lo(2), hi(2);
  lo << 0.0, 1.0;
  hi << 1.0, 0.0;  // crossed in coordinate 1
  CHECK_THROWS_AS(validate_set(Box{lo, hi}), InvalidDimensions);
  CHECK_THROWS_AS(validate_set(Ball{Eigen::VectorXd::Zero(2), 0.0}), InvalidDimensions);
  CHECK_THROWS_AS(validate_set(Halfspace{Eigen::VectorXd::Zero(2), 1.0}),
                  InvalidDimensions);
  CHECK_NOTHROW(validate_set(Ball{Eigen::VectorXd::Zero(2), 0.5}));
}

TEST_CASE("convex set json round trip") {
  for (const auto& s : sample_sets()) {
    const ConvexSet back = set_from_json(set_to_json(s));
    CHECK(back.index() == s.index());
    SetSampler sampler(7);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd v = sampler.ambient(dimension(s));
      CHECK((project(back, v) - project(s, v)).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(set_from_json(nlohmann::json{{"variant", "simplex"}}), SchemaMismatch);
}
