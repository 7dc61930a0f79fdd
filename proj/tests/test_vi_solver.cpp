#include <doctest.h>

#include <cmath>
#include <random>

#include "ppcm/errors.hpp"
#include "ppcm/problems.hpp"
#include "ppcm/runtime.hpp"
#include "ppcm/vi_solver.hpp"

using namespace ppcm;

namespace {

// Dense assembly of the scaling matrix H = blkdiag(R, S^-1) and the
// consensus operator, used as the independent route for direction and
// step-size checks.
struct DenseOracle {
  Eigen::MatrixXd H;
  Eigen::MatrixXd A;  // L (x) I_n

  DenseOracle(const ConsensusProblem& cp, const ScalingState& sc) {
    const int p = cp.p();
    const int n = cp.n;
    const Eigen::Index pn = cp.stacked_size();
    H = Eigen::MatrixXd::Zero(2 * pn, 2 * pn);
    for (int i = 0; i < p; ++i) {
      for (int k = 0; k < n; ++k) {
        H(i * n + k, i * n + k) = sc.r(i);
        H(pn + i * n + k, pn + i * n + k) = 1.0 / sc.s(i);
      }
    }
    A = Eigen::MatrixXd::Zero(pn, pn);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        A.block(i * n, j * n, n, n) =
            cp.laplacian.entries(i, j) * Eigen::MatrixXd::Identity(n, n);
  }

  Eigen::VectorXd xi(const ConsensusProblem& cp, const PrimalDualPoint& u,
                     const PrimalDualPoint& ut) const {
    const Eigen::Index pn = cp.stacked_size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * pn);
    out.head(pn) = (stacked_gradient(cp, u.x) - stacked_gradient(cp, ut.x)) -
                   A.transpose() * (u.lambda - ut.lambda);
    return out;
  }

  Eigen::VectorXd stacked_diff(const PrimalDualPoint& u, const PrimalDualPoint& ut) const {
    Eigen::VectorXd diff(u.x.size() + u.lambda.size());
    diff << u.x - ut.x, u.lambda - ut.lambda;
    return diff;
  }

  Eigen::VectorXd direction(const ConsensusProblem& cp, const PrimalDualPoint& u,
                            const PrimalDualPoint& ut) const {
    return H * stacked_diff(u, ut) - xi(cp, u, ut);
  }

  double alpha_star(const ConsensusProblem& cp, const PrimalDualPoint& u,
                    const PrimalDualPoint& ut) const {
    const Eigen::VectorXd d = direction(cp, u, ut);
    return stacked_diff(u, ut).dot(d) / d.dot(H.inverse() * d);
  }
};

// One accepted prediction with the same retry rule the solver uses.
std::pair<PrimalDualPoint, ScalingState> accepted_prediction(
    const ConsensusProblem& cp, const PrimalDualPoint& u, ScalingState sc,
    int max_retries = 50) {
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    const PrimalDualPoint ut = predict(u, cp, sc);
    const Eigen::VectorXd gx = stacked_gradient(cp, u.x);
    const Eigen::VectorXd gt = stacked_gradient(cp, ut.x);
    const CriterionResult crit = criterion_holds(u, ut, sc, gx, gt, cp.n);
    if (crit.holds) return {ut, sc};
    sc = adjust_r_up(sc, crit.mu);
  }
  throw InnerLoopStall("accepted_prediction: retries exhausted");
}

PrimalDualPoint random_point(const ConsensusProblem& cp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  PrimalDualPoint u;
  u.x.resize(cp.stacked_size());
  u.lambda.resize(cp.stacked_size());
  for (Eigen::Index i = 0; i < cp.stacked_size(); ++i) {
    u.x(i) = normal(rng);
    u.lambda(i) = normal(rng);
  }
  u.x = project_stacked(cp, u.x);
  return u;
}

}  // namespace

TEST_CASE("predictor fixed points and hand values") {
  SUBCASE("zero gradient and consensus start stay put") {
    // One zero row makes the objective identically zero.
    std::vector<AgentProblem> agents;
    for (int i = 0; i < 2; ++i)
      agents.push_back(AgentProblem{
          i,
          std::make_shared<QuadraticObjective>(Eigen::MatrixXd::Zero(1, 2),
                                               Eigen::VectorXd::Zero(1)),
          WholeSpace{2}});
    const auto cp = make_consensus_problem(
        std::move(agents), adjacency_uniform(build_topology(TopologyKind::Complete, 2, 0)));
    PrimalDualPoint u;
    u.x.resize(4);
    u.x << 0.7, -0.3, 0.7, -0.3;  // consensus
    u.lambda = Eigen::VectorXd::Zero(4);
    const ScalingState sc = ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho);
    const PrimalDualPoint ut = predict(u, cp, sc);
    CHECK((ut.x - u.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ut.lambda.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("two-agent toy from zero start") {
    const auto [inst, cp] = toy_problem();
    PrimalDualPoint u;
    u.x = Eigen::VectorXd::Zero(2);
    u.lambda = Eigen::VectorXd::Zero(2);
    const ScalingState sc = ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho);
    const PrimalDualPoint ut = predict(u, cp, sc);
    CHECK(ut.x(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ut.x(1) == doctest::Approx(3.0).epsilon(1e-15));
    // lambda~ = -s * (L x~) with s = 0.81: blocks +-0.405.
    CHECK(ut.lambda(0) == doctest::Approx(0.405).epsilon(1e-15));
    CHECK(ut.lambda(1) == doctest::Approx(-0.405).epsilon(1e-15));
  }

  SUBCASE("a solution point is a predictor fixed point") {
    const auto [inst, cp] = toy_problem();
    PrimalDualPoint star;
    star.x = Eigen::VectorXd::Constant(2, 2.0);
    star.lambda.resize(2);
    star.lambda << 2.0, -2.0;
    REQUIRE(vi_residual(star, cp) <= 1e-14);
    const ScalingState sc = ScalingState::init(2, 2.0, 0.9, cp.laplacian.rho);
    const PrimalDualPoint ut = predict(star, cp, sc);
    CHECK((ut.x - star.x).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((ut.lambda - star.lambda).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("acceptance criterion") {
  const auto [inst, cp] = toy_problem();
  PrimalDualPoint u;
  u.x = Eigen::VectorXd::Zero(2);
  u.lambda = Eigen::VectorXd::Zero(2);

  SUBCASE("unit curvature with r = 1 fails at eta = 0.9") {
    const ScalingState sc = ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho);
    const PrimalDualPoint ut = predict(u, cp, sc);
    const auto crit = criterion_holds(u, ut, sc, stacked_gradient(cp, u.x),
                                      stacked_gradient(cp, ut.x), cp.n);
    CHECK_FALSE(crit.holds);
    CHECK(crit.mu(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(crit.mu(1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("r at the lipschitz bound over eta always passes") {
    const auto [inst4, cp4] = generate_lsq(24, 3, 4, 3);
    ScalingState sc = ScalingState::init(4, 1.0, 0.9, cp4.laplacian.rho);
    for (int i = 0; i < 4; ++i) {
      const auto bound = cp4.agents[static_cast<std::size_t>(i)].objective->lipschitz_bound();
      REQUIRE(bound.has_value());
      sc.r(i) = *bound / 0.9 * 1.0001;
    }
    sc.recouple();
    for (std::uint64_t seed : {10ull, 11ull, 12ull}) {
      const PrimalDualPoint v = random_point(cp4, seed);
      const PrimalDualPoint vt = predict(v, cp4, sc);
      const auto crit = criterion_holds(v, vt, sc, stacked_gradient(cp4, v.x),
                                        stacked_gradient(cp4, vt.x), cp4.n);
      CHECK(crit.holds);
    }
  }

  SUBCASE("identical predictor gives zero ratios") {
    const ScalingState sc = ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho);
    const auto crit =
        criterion_holds(u, u, sc, stacked_gradient(cp, u.x), stacked_gradient(cp, u.x), cp.n);
    CHECK(crit.holds);
    CHECK(crit.mu.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("scaling adjustments") {
  ScalingState sc = ScalingState::init(3, 1.0, 0.9, 1.0);

  SUBCASE("violators scale up by 1.5 max(1, mu)") {
    Eigen::Vector3d mu(1.0, 2.0, 0.5);
    const ScalingState next = adjust_r_up(sc, mu);
    CHECK(next.r(0) == 1.5);
    CHECK(next.r(1) == 3.0);
    CHECK(next.r(2) == 1.0);  // below eta, untouched
    CHECK(next.s(1) == doctest::Approx(0.81 * 3.0).epsilon(1e-15));
  }

  SUBCASE("overflow cap") {
    Eigen::Vector3d mu(1e13, 0.0, 0.0);
    CHECK_THROWS_AS(adjust_r_up(sc, mu, 1e12), ScalingOverflow);
  }

  SUBCASE("small ratios scale down by mu / 0.7") {
    sc.r << 2.0, 1.0, 1.0;
    sc.recouple();
    Eigen::Vector3d mu(0.35, 0.6, 0.0);
    const ScalingState next = adjust_r_down(sc, mu);
    CHECK(next.r(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(next.r(1) == 1.0);  // 0.6 > 0.5, unchanged
    CHECK(next.r(2) == 1.0);  // zero ratio is uninformative, unchanged
  }

  SUBCASE("tiny positive ratios hit the floor instead of zeroing r") {
    sc.r << 1e-10, 1.0, 1.0;
    sc.recouple();
    Eigen::Vector3d mu(1e-8, 1.0, 1.0);
    const ScalingState next = adjust_r_down(sc, mu);
    CHECK(next.r(0) == 1e-12);
  }
}

TEST_CASE("direction and step size against the dense oracle") {
  SUBCASE("zero xi reduces the direction to H(u - u~) and alpha* to one") {
    const auto [inst, cp] = toy_problem();
    const ScalingState sc = ScalingState::init(2, 1.5, 0.9, cp.laplacian.rho);
    const PrimalDualPoint u = random_point(cp, 5);
    PrimalDualPoint ut = random_point(cp, 6);
    const Eigen::VectorXd zero_xi = Eigen::VectorXd::Zero(4);
    const Eigen::VectorXd d = direction(u, ut, sc, zero_xi, cp.n);
    const DenseOracle oracle(cp, sc);
    CHECK((d - oracle.H * oracle.stacked_diff(u, ut)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(alpha_star(u, ut, sc, d, cp.n) == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::VectorXd d0 = direction(u, u, sc, zero_xi, cp.n);
    CHECK(d0.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("toy first iteration matches the dense assembly") {
    const auto [inst, cp] = toy_problem();
    PrimalDualPoint u;
    u.x = Eigen::VectorXd::Zero(2);
    u.lambda = Eigen::VectorXd::Zero(2);
    const auto [ut, sc] =
        accepted_prediction(cp, u, ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho));

    const Eigen::VectorXd gx = stacked_gradient(cp, u.x);
    const Eigen::VectorXd gt = stacked_gradient(cp, ut.x);
    const Eigen::VectorXd xi = assemble_xi(cp, u, ut, gx, gt);
    const Eigen::VectorXd d = direction(u, ut, sc, xi, cp.n);

    const DenseOracle oracle(cp, sc);
    CHECK((xi - oracle.xi(cp, u, ut)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((d - oracle.direction(cp, u, ut)).cwiseAbs().maxCoeff() <= 1e-12);
    const double astar = alpha_star(u, ut, sc, d, cp.n);
    CHECK(astar == doctest::Approx(oracle.alpha_star(cp, u, ut)).epsilon(1e-12));
    CHECK(astar > 0.5);
  }

  SUBCASE("random instance mid-run states match the dense assembly") {
    const auto [inst, cp] = generate_lsq(18, 2, 3, 8);
    PrimalDualPoint u = make_start_point(cp);
    ScalingState sc = ScalingState::init(3, 1.0, 0.9, cp.laplacian.rho);
    for (int iter = 0; iter < 5; ++iter) {
      const auto [ut, accepted] = accepted_prediction(cp, u, sc);
      sc = accepted;
      const Eigen::VectorXd gx = stacked_gradient(cp, u.x);
      const Eigen::VectorXd gt = stacked_gradient(cp, ut.x);
      const Eigen::VectorXd xi = assemble_xi(cp, u, ut, gx, gt);
      const Eigen::VectorXd d = direction(u, ut, sc, xi, cp.n);
      const DenseOracle oracle(cp, sc);
      CHECK((d - oracle.direction(cp, u, ut)).cwiseAbs().maxCoeff() <= 1e-10);
      const double astar = alpha_star(u, ut, sc, d, cp.n);
      CHECK(astar == doctest::Approx(oracle.alpha_star(cp, u, ut)).epsilon(1e-10));
      CHECK(astar > 0.5);
      u = correct(u, ut, cp, sc, 1.5 * astar);
    }
  }
}

TEST_CASE("exact scaled-norm criterion holds whenever the per-agent split accepts") {
  const auto [inst, cp] = generate_lsq(18, 2, 3, 31);
  PrimalDualPoint u = make_start_point(cp);
  ScalingState sc = ScalingState::init(3, 1.0, 0.9, cp.laplacian.rho);
  for (int iter = 0; iter < 15; ++iter) {
    const auto [ut, accepted] = accepted_prediction(cp, u, sc);
    sc = accepted;
    const Eigen::VectorXd gx = stacked_gradient(cp, u.x);
    const Eigen::VectorXd gt = stacked_gradient(cp, ut.x);
    const Eigen::VectorXd xi = assemble_xi(cp, u, ut, gx, gt);
    // ||H^-1 xi||_H = sqrt(xi^T H^-1 xi); the dual part of xi is zero.
    double lhs_sq = 0.0;
    for (int i = 0; i < cp.p(); ++i)
      lhs_sq += xi.segment(i * cp.n, cp.n).squaredNorm() / sc.r(i);
    const double rhs = sc.eta * h_norm(sc, u.x - ut.x, u.lambda - ut.lambda, cp.n);
    CHECK(std::sqrt(lhs_sq) <= rhs + 1e-12);
    u = correct(u, ut, cp, sc, 1.0);
  }
}

TEST_CASE("correction") {
  const auto [inst, cp] = toy_problem();

  SUBCASE("unit step reproduces the predictor dual bitwise") {
    PrimalDualPoint u = random_point(cp, 17);
    const auto [ut, sc] =
        accepted_prediction(cp, u, ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho));
    const PrimalDualPoint next = correct(u, ut, cp, sc, 1.0);
    CHECK((next.lambda - ut.lambda).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("solution point is stationary under correction") {
    PrimalDualPoint star;
    star.x = Eigen::VectorXd::Constant(2, 2.0);
    star.lambda.resize(2);
    star.lambda << 2.0, -2.0;
    const ScalingState sc = ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho);
    const PrimalDualPoint next = correct(star, star, cp, sc, 1.0);
    CHECK((next.x - star.x).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((next.lambda - star.lambda).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SUBCASE("single relaxed step contracts toward the solution") {
    PrimalDualPoint star;
    star.x = Eigen::VectorXd::Constant(2, 2.0);
    star.lambda.resize(2);
    star.lambda << 2.0, -2.0;
    PrimalDualPoint u;
    u.x = Eigen::VectorXd::Zero(2);
    u.lambda = Eigen::VectorXd::Zero(2);
    const auto [ut, sc] =
        accepted_prediction(cp, u, ScalingState::init(2, 1.0, 0.9, cp.laplacian.rho));
    const Eigen::VectorXd gx = stacked_gradient(cp, u.x);
    const Eigen::VectorXd gt = stacked_gradient(cp, ut.x);
    const Eigen::VectorXd xi = assemble_xi(cp, u, ut, gx, gt);
    const Eigen::VectorXd d = direction(u, ut, sc, xi, cp.n);
    const double gamma = 1.5;
    const double astar = alpha_star(u, ut, sc, d, cp.n);
    const PrimalDualPoint next = correct(u, ut, cp, sc, gamma * astar);

    const double before = h_norm(sc, u.x - star.x, u.lambda - star.lambda, cp.n);
    const double after = h_norm(sc, next.x - star.x, next.lambda - star.lambda, cp.n);
    const double pred = h_norm(sc, u.x - ut.x, u.lambda - ut.lambda, cp.n);
    const double guaranteed =
        gamma * (2.0 - gamma) * (1.0 - 0.81) / 4.0 * pred * pred;
    CHECK(before * before - after * after >= guaranteed - 1e-9);
  }
}

TEST_CASE("full solve on the toy problem") {
  const auto [inst, cp] = toy_problem();

  SUBCASE("unit mode reaches the consensus optimum") {
    SolverConfig cfg;
    const auto [u, report] = solve(cp, cfg, make_start_point(cp));
    CHECK(report.converged());
    CHECK(u.x(0) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(u.x(1) == doctest::Approx(2.0).epsilon(1e-3));
    for (const auto& d : report.iterations) CHECK(d.mu.maxCoeff() <= cfg.eta);
    CHECK(vi_residual(u, cp) <= 10.0 * cfg.tol);
  }

  SUBCASE("adaptive mode satisfies the contraction inequality every iteration") {
    PrimalDualPoint star;
    star.x = Eigen::VectorXd::Constant(2, 2.0);
    star.lambda.resize(2);
    star.lambda << 2.0, -2.0;
    for (double gamma : {1.0, 1.5, 1.9}) {
      SolverConfig cfg;
      cfg.step_mode = StepMode::Adaptive;
      cfg.gamma = gamma;
      cfg.tol = 1e-6;
      const auto [u, report] = solve(cp, cfg, make_start_point(cp), &star);
      CHECK(report.converged());
      for (const auto& d : report.iterations) {
        if (d.pred_distance > 1e-12) CHECK(d.alpha_star > 0.5);
        REQUIRE(d.contraction_slack.has_value());
        CHECK(*d.contraction_slack >= -1e-9);
      }
    }
  }

  SUBCASE("box constraint clips the optimum to the upper bound") {
    const ConvexSet box =
        Box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1.5)};
    const ConsensusProblem boxed =
        lsq_consensus_problem(inst, cp.graph.topology, &box);

    // Grid search over the constrained consensus objective.
    double best_x = 0.0, best_val = 1e300;
    for (int k = 0; k <= 15000; ++k) {
      const double x = k * 1e-4;
      const double val = 0.5 * (x - 1.0) * (x - 1.0) + 0.5 * (x - 3.0) * (x - 3.0);
      if (val < best_val) {
        best_val = val;
        best_x = x;
      }
    }
    CHECK(best_x == doctest::Approx(1.5).epsilon(1e-12));

    SolverConfig cfg;
    cfg.tol = 1e-6;
    const auto [u, report] = solve(boxed, cfg, make_start_point(boxed));
    CHECK(report.converged());
    CHECK(u.x(0) == doctest::Approx(best_x).epsilon(1e-3));
    CHECK(u.x(1) == doctest::Approx(best_x).epsilon(1e-3));
    for (const auto& d : report.iterations) CHECK(d.consensus_gap >= 0.0);
    CHECK(contains(box, u.x.segment(0, 1), 1e-9));
    CHECK(contains(box, u.x.segment(1, 1), 1e-9));
  }

  SUBCASE("already-solved start stops after one iteration") {
    PrimalDualPoint star;
    star.x = Eigen::VectorXd::Constant(2, 2.0);
    star.lambda.resize(2);
    star.lambda << 2.0, -2.0;
    SolverConfig cfg;
    const auto [u, report] = solve(cp, cfg, star);
    CHECK(report.converged());
    CHECK(report.total_iters <= 1);
    CHECK(report.final_e <= cfg.tol);
  }

  SUBCASE("iteration cap flags the run instead of throwing") {
    SolverConfig cfg;
    cfg.max_iters = 2;
    cfg.tol = 1e-12;
    const auto [u, report] = solve(cp, cfg, make_start_point(cp));
    CHECK_FALSE(report.converged());
    CHECK(report.status == TerminationStatus::MaxItersExceeded);
    CHECK(report.total_iters == 2);
  }
}

TEST_CASE("solve on random instances keeps its running invariants") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto [inst, cp] = generate_lsq(40, 5, 4, seed);
    SolverConfig cfg;
    cfg.step_mode = StepMode::Adaptive;
    cfg.tol = 1e-4;
    cfg.max_iters = 5000;
    const auto [u, report] = solve(cp, cfg, make_start_point(cp));
    REQUIRE(report.converged());

    for (const auto& d : report.iterations) {
      CHECK(d.mu.maxCoeff() <= cfg.eta);
      if (d.pred_distance > 1e-12) CHECK(d.alpha_star > 0.5);
    }
    // Final predictor distance is tied to the stopping tolerance.
    CHECK(report.iterations.back().pred_distance <=
          cfg.tol * (1.0 + report.iterations.back().max_r));
    CHECK(vi_residual(u, cp) <= 10.0 * cfg.tol);

    // The computed solution matches the direct solve.
    const Eigen::VectorXd x_star = oracle_solve(inst);
    for (int i = 0; i < cp.p(); ++i)
      CHECK((u.x.segment(i * cp.n, cp.n) - x_star).norm() <=
            1e-3 * std::max(1.0, x_star.norm()));
  }
}

TEST_CASE("primal iterates stay feasible under constraints") {
  const auto [inst, cp_plain] = generate_lsq(12, 2, 3, 5);
  const ConvexSet ball = Ball{Eigen::VectorXd::Zero(2), 0.4};
  const ConsensusProblem cp = lsq_consensus_problem(inst, cp_plain.graph.topology, &ball);
  SolverConfig cfg;
  cfg.tol = 1e-5;
  cfg.max_iters = 5000;
  cfg.record_iterates = true;
  const auto [u, report] = solve(cp, cfg, make_start_point(cp));
  for (const auto& point : report.trajectory)
    for (int i = 0; i < cp.p(); ++i)
      CHECK(contains(ball, point.x.segment(i * cp.n, cp.n), 1e-9));
}

TEST_CASE("pathological objectives surface as typed errors") {
  SUBCASE("discontinuous gradient stalls the inner loop") {
    class JumpObjective final : public Objective {
     public:
      int dim() const override { return 1; }
      double value(const Eigen::VectorXd& x) const override { return 1e6 * std::abs(x(0)); }
      Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
        Eigen::VectorXd g(1);
        g(0) = x(0) >= 0.0 ? 1e6 : -1e6;
        return g;
      }
    };
    std::vector<AgentProblem> agents;
    for (int i = 0; i < 2; ++i)
      agents.push_back(AgentProblem{i, std::make_shared<JumpObjective>(), WholeSpace{1}});
    const auto cp = make_consensus_problem(
        std::move(agents), adjacency_uniform(build_topology(TopologyKind::Complete, 2, 0)));
    SolverConfig cfg;
    cfg.max_inner_retries = 5;
    PrimalDualPoint u0;
    u0.x = Eigen::VectorXd::Ones(2);
    u0.lambda = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(solve(cp, cfg, u0), InnerLoopStall);
  }

  SUBCASE("extreme curvature overflows the scaling cap") {
    std::vector<AgentProblem> agents;
    for (int i = 0; i < 2; ++i)
      agents.push_back(AgentProblem{
          i,
          std::make_shared<QuadraticObjective>(Eigen::MatrixXd::Constant(1, 1, 1e7),
                                               Eigen::VectorXd::Zero(1)),
          WholeSpace{1}});
    const auto cp = make_consensus_problem(
        std::move(agents), adjacency_uniform(build_topology(TopologyKind::Complete, 2, 0)));
    SolverConfig cfg;
    PrimalDualPoint u0;
    u0.x = Eigen::VectorXd::Ones(2);
    u0.lambda = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(solve(cp, cfg, u0), ScalingOverflow);
  }
}

TEST_CASE("nonzero linear-constraint targets run through the same machinery") {
  // Same toy objectives, but the constraint asks for x_0 - x_1 = 1 instead
  // of agreement. Stationarity by hand: x_0 = 1 + t, x_1 = 3 - t with
  // 2t = 3, so x = (2.5, 1.5).
  auto [inst, cp] = toy_problem();
  cp.constraint_rhs.resize(2);
  cp.constraint_rhs << 0.25, -0.25;  // (L x) target for x_0 - x_1 = 1

  SolverConfig cfg;
  cfg.tol = 1e-7;
  cfg.max_iters = 100000;
  const auto [u, report] = solve(cp, cfg, make_start_point(cp));
  REQUIRE(report.converged());
  CHECK(u.x(0) == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(u.x(1) == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(vi_residual(u, cp) <= 1e-4);

  const auto [ue, ereport] = extragradient_solve(cp, 0.5, 1e-8, 100000, make_start_point(cp));
  REQUIRE(ereport.converged());
  CHECK(ue.x(0) == doctest::Approx(2.5).epsilon(1e-4));
  CHECK(ue.x(1) == doctest::Approx(1.5).epsilon(1e-4));

  SimulationConfig sim_cfg;
  CHECK_THROWS_AS(Simulation(cp, sim_cfg), Error);
}

TEST_CASE("solution certificate") {
  const auto [inst, cp] = toy_problem();

  SUBCASE("tight solve drives the residual down") {
    SolverConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_iters = 100000;
    const auto [u, report] = solve(cp, cfg, make_start_point(cp));
    REQUIRE(report.converged());
    CHECK(vi_residual(u, cp) <= 1e-6);
  }

  SUBCASE("random points are not certified") {
    CHECK(vi_residual(random_point(cp, 3), cp) > 0.0);
  }

  SUBCASE("constructed stationary point certifies at zero") {
    const auto [inst4, cp4] = generate_lsq(20, 3, 4, 9);
    const Eigen::VectorXd x_star = oracle_solve(inst4);
    const PrimalDualPoint ref = build_reference_point(cp4, x_star);
    CHECK(vi_residual(ref, cp4) <= 1e-10);
  }
}

TEST_CASE("extragradient reference solver") {
  const auto [inst, cp] = toy_problem();

  SUBCASE("moderate step converges to the consensus optimum") {
    const auto [u, report] =
        extragradient_solve(cp, 0.5, 1e-6, 100000, make_start_point(cp));
    CHECK(report.converged());
    CHECK(u.x(0) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(u.x(1) == doctest::Approx(2.0).epsilon(1e-3));
  }

  SUBCASE("absurd step is flagged, not thrown") {
    const auto [u, report] = extragradient_solve(cp, 1e6, 1e-6, 200, make_start_point(cp));
    CHECK_FALSE(report.converged());
    CHECK(report.status == TerminationStatus::MaxItersExceeded);
  }

  SUBCASE("solution start terminates immediately") {
    PrimalDualPoint star;
    star.x = Eigen::VectorXd::Constant(2, 2.0);
    star.lambda.resize(2);
    star.lambda << 2.0, -2.0;
    const auto [u, report] = extragradient_solve(cp, 0.5, 1e-9, 100, star);
    CHECK(report.converged());
    CHECK(report.total_iters == 1);
  }
}
