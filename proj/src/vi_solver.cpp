#include "ppcm/vi_solver.hpp"

#include <chrono>
#include <cmath>

#include "ppcm/errors.hpp"

namespace ppcm {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

void check_point(const ConsensusProblem& cp, const PrimalDualPoint& u, const char* op) {
  if (u.x.size() != cp.stacked_size() || u.lambda.size() != cp.stacked_size())
    throw ShapeMismatch(std::string(op) + ": iterate has wrong stacked size");
}

void check_config(const SolverConfig& cfg) {
  if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) throw Error("solver config: eta must be in (0,1)");
  if (!(cfg.gamma >= 1.0 && cfg.gamma < 2.0)) throw Error("solver config: gamma must be in [1,2)");
  if (!(cfg.tol > 0.0)) throw Error("solver config: tol must be positive");
  if (cfg.max_iters < 1) throw Error("solver config: max_iters must be >= 1");
  if (!(cfg.r_init > 0.0)) throw Error("solver config: r_init must be positive");
}

// Max over agents of Algorithm-local stopping errors
// max(|x_i - x~_i|_inf, |lambda_i - lambda+_i|_inf).
double stopping_error(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                      const PrimalDualPoint& u_next, int p, int n) {
  double e = 0.0;
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    const double ex =
        (u.x.segment(off, n) - u_tilde.x.segment(off, n)).lpNorm<Eigen::Infinity>();
    const double el =
        (u.lambda.segment(off, n) - u_next.lambda.segment(off, n)).lpNorm<Eigen::Infinity>();
    e = std::max(e, std::max(ex, el));
  }
  return e;
}

}  // namespace

ScalingState ScalingState::init(int p, double r_init, double eta, double rho) {
  ScalingState sc;
  sc.eta = eta;
  sc.rho = rho;
  sc.r = VectorXd::Constant(p, r_init);
  sc.s.resize(p);
  sc.recouple();
  return sc;
}

void ScalingState::recouple() {
  for (Index i = 0; i < r.size(); ++i) s(i) = eta * eta * r(i) / rho;
}

PrimalDualPoint make_start_point(const ConsensusProblem& cp) {
  PrimalDualPoint u;
  u.x = project_stacked(cp, VectorXd::Zero(cp.stacked_size()));
  u.lambda = VectorXd::Zero(cp.stacked_size());
  return u;
}

Eigen::VectorXd apply_operator(const ConsensusProblem& cp, const PrimalDualPoint& u) {
  check_point(cp, u, "apply_operator");
  VectorXd out(2 * cp.stacked_size());
  out.head(cp.stacked_size()) =
      stacked_gradient(cp, u.x) - apply_consensus_operator(cp.laplacian, u.lambda, cp.n);
  out.tail(cp.stacked_size()) =
      apply_consensus_operator(cp.laplacian, u.x, cp.n) - cp.constraint_rhs;
  return out;
}

double h_norm(const ScalingState& sc, const Eigen::VectorXd& dx,
              const Eigen::VectorXd& dl, int n) {
  const int p = static_cast<int>(sc.r.size());
  if (dx.size() != static_cast<Index>(p) * n || dl.size() != dx.size())
    throw ShapeMismatch("h_norm: stacked size mismatch");
  double acc = 0.0;
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    acc += sc.r(i) * dx.segment(off, n).squaredNorm();
    acc += dl.segment(off, n).squaredNorm() / sc.s(i);
  }
  return std::sqrt(acc);
}

PrimalDualPoint predict(const PrimalDualPoint& u, const ConsensusProblem& cp,
                        const ScalingState& sc) {
  check_point(cp, u, "predict");
  const int p = cp.p();
  const int n = cp.n;
  const VectorXd grad_x = stacked_gradient(cp, u.x);
  const VectorXd coupling = apply_consensus_operator(cp.laplacian, u.lambda, n);

  PrimalDualPoint u_tilde;
  u_tilde.x.resize(u.x.size());
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    u_tilde.x.segment(off, n) = project(
        cp.agents[static_cast<std::size_t>(i)].set,
        u.x.segment(off, n) -
            (grad_x.segment(off, n) - coupling.segment(off, n)) / sc.r(i));
  }
  const VectorXd ax_tilde = apply_consensus_operator(cp.laplacian, u_tilde.x, n);
  u_tilde.lambda.resize(u.lambda.size());
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    u_tilde.lambda.segment(off, n) =
        u.lambda.segment(off, n) -
        sc.s(i) * (ax_tilde.segment(off, n) - cp.constraint_rhs.segment(off, n));
  }
  return u_tilde;
}

CriterionResult criterion_holds(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                                const ScalingState& sc, const Eigen::VectorXd& grad_x,
                                const Eigen::VectorXd& grad_x_tilde, int n) {
  const int p = static_cast<int>(sc.r.size());
  if (grad_x.size() != static_cast<Index>(p) * n || grad_x_tilde.size() != grad_x.size())
    throw ShapeMismatch("criterion: gradient stack has wrong size");
  CriterionResult res;
  res.mu.resize(p);
  res.holds = true;
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    const double den = (u.x.segment(off, n) - u_tilde.x.segment(off, n)).norm();
    if (den == 0.0) {
      res.mu(i) = 0.0;  // stationary block, vacuously accepted
      continue;
    }
    const double num = (grad_x.segment(off, n) - grad_x_tilde.segment(off, n)).norm();
    res.mu(i) = num / (sc.r(i) * den);
    if (res.mu(i) > sc.eta) res.holds = false;
  }
  return res;
}

ScalingState adjust_r_up(const ScalingState& sc, const Eigen::VectorXd& mu, double r_max) {
  ScalingState next = sc;
  for (Index i = 0; i < next.r.size(); ++i) {
    if (mu(i) > sc.eta) {
      next.r(i) = next.r(i) * (1.5 * std::max(1.0, mu(i)));
      if (next.r(i) > r_max)
        throw ScalingOverflow("adjust_r_up: r exceeded cap at agent " + std::to_string(i));
    }
  }
  next.recouple();
  return next;
}

ScalingState adjust_r_down(const ScalingState& sc, const Eigen::VectorXd& mu) {
  ScalingState next = sc;
  for (Index i = 0; i < next.r.size(); ++i) {
    // A zero ratio comes from x_i == x~_i and carries no curvature
    // information; shrinking on it collapses the dual step and can freeze a
    // constrained run on its active set, so only informative ratios shrink r.
    if (mu(i) > 0.0 && mu(i) <= 0.5) {
      next.r(i) = std::max(1e-12, next.r(i) * (mu(i) / 0.7));
    }
  }
  next.recouple();
  return next;
}

Eigen::VectorXd assemble_xi(const ConsensusProblem& cp, const PrimalDualPoint& u,
                            const PrimalDualPoint& u_tilde,
                            const Eigen::VectorXd& grad_x,
                            const Eigen::VectorXd& grad_x_tilde) {
  const Index pn = cp.stacked_size();
  VectorXd xi = VectorXd::Zero(2 * pn);
  xi.head(pn) = (grad_x - grad_x_tilde) -
                apply_consensus_operator(cp.laplacian, u.lambda - u_tilde.lambda, cp.n);
  return xi;
}

Eigen::VectorXd direction(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                          const ScalingState& sc, const Eigen::VectorXd& xi, int n) {
  const int p = static_cast<int>(sc.r.size());
  const Index pn = static_cast<Index>(p) * n;
  if (xi.size() != 2 * pn) throw ShapeMismatch("direction: xi has wrong size");
  VectorXd d(2 * pn);
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    d.segment(off, n) = sc.r(i) * (u.x.segment(off, n) - u_tilde.x.segment(off, n)) -
                        xi.segment(off, n);
    d.segment(pn + off, n) =
        (u.lambda.segment(off, n) - u_tilde.lambda.segment(off, n)) / sc.s(i) -
        xi.segment(pn + off, n);
  }
  return d;
}

double alpha_star(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                  const ScalingState& sc, const Eigen::VectorXd& d, int n) {
  const int p = static_cast<int>(sc.r.size());
  const Index pn = static_cast<Index>(p) * n;
  double num = 0.0;
  double den = 0.0;  // d^T H^{-1} d
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    num += (u.x.segment(off, n) - u_tilde.x.segment(off, n)).dot(d.segment(off, n));
    num += (u.lambda.segment(off, n) - u_tilde.lambda.segment(off, n))
               .dot(d.segment(pn + off, n));
    den += d.segment(off, n).squaredNorm() / sc.r(i);
    den += sc.s(i) * d.segment(pn + off, n).squaredNorm();
  }
  if (den <= 0.0) {
    const double diff = (u.x - u_tilde.x).norm() + (u.lambda - u_tilde.lambda).norm();
    if (diff > 0.0)
      throw DegeneratePrediction("alpha_star: zero direction at a moving iterate");
    return 1.0;
  }
  return num / den;
}

PrimalDualPoint correct(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                        const ConsensusProblem& cp, const ScalingState& sc,
                        double alpha) {
  check_point(cp, u, "correct");
  const int p = cp.p();
  const int n = cp.n;
  const VectorXd grad_tilde = stacked_gradient(cp, u_tilde.x);
  const VectorXd coupling = apply_consensus_operator(cp.laplacian, u_tilde.lambda, n);
  const VectorXd ax_tilde = apply_consensus_operator(cp.laplacian, u_tilde.x, n);

  PrimalDualPoint next;
  next.x.resize(u.x.size());
  next.lambda.resize(u.lambda.size());
  for (int i = 0; i < p; ++i) {
    const Index off = static_cast<Index>(i) * n;
    next.x.segment(off, n) = project(
        cp.agents[static_cast<std::size_t>(i)].set,
        u.x.segment(off, n) -
            (alpha * (grad_tilde.segment(off, n) - coupling.segment(off, n))) / sc.r(i));
    next.lambda.segment(off, n) =
        u.lambda.segment(off, n) -
        alpha * (sc.s(i) *
                 (ax_tilde.segment(off, n) - cp.constraint_rhs.segment(off, n)));
  }
  return next;
}

std::pair<PrimalDualPoint, RunReport> solve(const ConsensusProblem& cp,
                                            const SolverConfig& cfg, PrimalDualPoint u,
                                            const PrimalDualPoint* reference) {
  check_config(cfg);
  check_point(cp, u, "solve");
  if (reference) check_point(cp, *reference, "solve reference");

  const int p = cp.p();
  const int n = cp.n;
  const Index pn = cp.stacked_size();
  ScalingState sc = ScalingState::init(p, cfg.r_init, cfg.eta, cp.laplacian.rho);

  RunReport report;
  report.config = cfg;
  report.status = TerminationStatus::MaxItersExceeded;
  if (cfg.record_iterates) report.trajectory.push_back(u);
  const auto t0 = std::chrono::steady_clock::now();

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // Self-tuning prediction: bump r on agents whose gradient ratio fails
    // the acceptance test, until every mu_i <= eta.
    const VectorXd grad_x = stacked_gradient(cp, u.x);
    const VectorXd coupling = apply_consensus_operator(cp.laplacian, u.lambda, n);
    VectorXd x_tilde(pn);
    VectorXd grad_tilde(pn);
    CriterionResult crit;
    int retries = 0;
    for (;;) {
      for (int i = 0; i < p; ++i) {
        const Index off = static_cast<Index>(i) * n;
        x_tilde.segment(off, n) = project(
            cp.agents[static_cast<std::size_t>(i)].set,
            u.x.segment(off, n) -
                (grad_x.segment(off, n) - coupling.segment(off, n)) / sc.r(i));
      }
      grad_tilde = stacked_gradient(cp, x_tilde);
      PrimalDualPoint primal_only{x_tilde, u.lambda};
      crit = criterion_holds(u, primal_only, sc, grad_x, grad_tilde, n);
      if (crit.holds) break;
      if (retries >= cfg.max_inner_retries)
        throw InnerLoopStall("solve: acceptance test unmet after " +
                             std::to_string(retries) + " scaling retries");
      sc = adjust_r_up(sc, crit.mu, cfg.r_max);
      ++retries;
    }

    // Dual half of the predictor from the fresh x~.
    const VectorXd ax_tilde = apply_consensus_operator(cp.laplacian, x_tilde, n);
    PrimalDualPoint u_tilde;
    u_tilde.x = x_tilde;
    u_tilde.lambda.resize(pn);
    for (int i = 0; i < p; ++i) {
      const Index off = static_cast<Index>(i) * n;
      u_tilde.lambda.segment(off, n) =
          u.lambda.segment(off, n) -
          sc.s(i) * (ax_tilde.segment(off, n) - cp.constraint_rhs.segment(off, n));
    }

    const double pred_dist = h_norm(sc, u.x - u_tilde.x, u.lambda - u_tilde.lambda, n);

    double alpha = 1.0;
    double astar = std::numeric_limits<double>::quiet_NaN();
    if (cfg.step_mode == StepMode::Adaptive && pred_dist > 0.0) {
      const VectorXd xi = assemble_xi(cp, u, u_tilde, grad_x, grad_tilde);
      const VectorXd d = direction(u, u_tilde, sc, xi, n);
      astar = alpha_star(u, u_tilde, sc, d, n);
      alpha = cfg.gamma * astar;
    }

    // Correction; reuses the cached gradient at x~ and A x~.
    const VectorXd coupling_tilde =
        apply_consensus_operator(cp.laplacian, u_tilde.lambda, n);
    PrimalDualPoint u_next;
    u_next.x.resize(pn);
    u_next.lambda.resize(pn);
    for (int i = 0; i < p; ++i) {
      const Index off = static_cast<Index>(i) * n;
      u_next.x.segment(off, n) = project(
          cp.agents[static_cast<std::size_t>(i)].set,
          u.x.segment(off, n) -
              (alpha * (grad_tilde.segment(off, n) - coupling_tilde.segment(off, n))) /
                  sc.r(i));
      u_next.lambda.segment(off, n) =
          u.lambda.segment(off, n) -
          alpha * (sc.s(i) *
                   (ax_tilde.segment(off, n) - cp.constraint_rhs.segment(off, n)));
    }

    IterationDiagnostics diag;
    diag.iter = iter;
    diag.mu = crit.mu;
    diag.alpha_star = astar;
    diag.pred_distance = pred_dist;
    diag.max_r = sc.r.maxCoeff();
    diag.inner_retries = retries;
    diag.e_stop = stopping_error(u, u_tilde, u_next, p, n);
    diag.objective = consensus_objective(cp, u_next.x);
    diag.consensus_gap = consensus_gap(cp, u_next.x);
    if (reference && cfg.step_mode == StepMode::Adaptive) {
      const double before = h_norm(sc, u.x - reference->x, u.lambda - reference->lambda, n);
      const double after =
          h_norm(sc, u_next.x - reference->x, u_next.lambda - reference->lambda, n);
      const double guaranteed = cfg.gamma * (2.0 - cfg.gamma) *
                                (1.0 - cfg.eta * cfg.eta) / 4.0 * pred_dist * pred_dist;
      diag.contraction_slack = before * before - after * after - guaranteed;
    }
    report.iterations.push_back(std::move(diag));

    // The post-step scaling decrease is a unit-step speedup. Under relaxed
    // steps it makes the iteration norm oscillate every round, and the
    // per-iteration contraction cannot outrun the norm changes (observed
    // divergence on random instances), so adaptive mode only ever raises r.
    if (cfg.step_mode == StepMode::Unit) sc = adjust_r_down(sc, crit.mu);
    u = std::move(u_next);
    if (cfg.record_iterates) report.trajectory.push_back(u);

    if (report.iterations.back().e_stop <= cfg.tol) {
      report.status = TerminationStatus::Converged;
      break;
    }
  }

  report.total_iters = static_cast<int>(report.iterations.size());
  report.final_e =
      report.iterations.empty() ? 0.0 : report.iterations.back().e_stop;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(u), std::move(report)};
}

double vi_residual(const PrimalDualPoint& u, const ConsensusProblem& cp) {
  check_point(cp, u, "vi_residual");
  const Index pn = cp.stacked_size();
  const VectorXd f = apply_operator(cp, u);
  const VectorXd projected = project_stacked(cp, u.x - f.head(pn));
  const double primal = (u.x - projected).lpNorm<Eigen::Infinity>();
  const double dual = f.tail(pn).lpNorm<Eigen::Infinity>();
  return std::max(primal, dual);
}

std::pair<PrimalDualPoint, RunReport> extragradient_solve(const ConsensusProblem& cp,
                                                          double beta, double tol,
                                                          int max_iters,
                                                          PrimalDualPoint u) {
  if (!(beta > 0.0)) throw Error("extragradient: beta must be positive");
  check_point(cp, u, "extragradient");
  const Index pn = cp.stacked_size();

  RunReport report;
  report.method = "extragradient";
  report.config.tol = tol;
  report.config.max_iters = max_iters;
  report.status = TerminationStatus::MaxItersExceeded;
  const auto t0 = std::chrono::steady_clock::now();

  for (int iter = 0; iter < max_iters; ++iter) {
    const VectorXd f_u = apply_operator(cp, u);
    PrimalDualPoint u_tilde;
    u_tilde.x = project_stacked(cp, u.x - beta * f_u.head(pn));
    u_tilde.lambda = u.lambda - beta * f_u.tail(pn);

    const double gap = std::max((u.x - u_tilde.x).lpNorm<Eigen::Infinity>(),
                                (u.lambda - u_tilde.lambda).lpNorm<Eigen::Infinity>());
    IterationDiagnostics diag;
    diag.iter = iter;
    diag.e_stop = gap;
    diag.pred_distance = gap;
    diag.objective = consensus_objective(cp, u.x);
    diag.consensus_gap = consensus_gap(cp, u.x);
    report.iterations.push_back(std::move(diag));
    if (gap <= tol) {
      report.status = TerminationStatus::Converged;
      break;
    }

    const VectorXd f_t = apply_operator(cp, u_tilde);
    u.x = project_stacked(cp, u.x - beta * f_t.head(pn));
    u.lambda = u.lambda - beta * f_t.tail(pn);
  }

  report.total_iters = static_cast<int>(report.iterations.size());
  report.final_e = report.iterations.empty() ? 0.0 : report.iterations.back().e_stop;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(u), std::move(report)};
}

PrimalDualPoint build_reference_point(const ConsensusProblem& cp,
                                      const Eigen::VectorXd& x_star_block) {
  if (x_star_block.size() != cp.n)
    throw ShapeMismatch("build_reference_point: block has wrong dimension");
  const int p = cp.p();
  const int n = cp.n;

  PrimalDualPoint ref;
  ref.x.resize(cp.stacked_size());
  for (int i = 0; i < p; ++i) ref.x.segment(static_cast<Index>(i) * n, n) = x_star_block;

  // Minimum-norm solve of (L (x) I_n) lambda = g(x*), one p-dimensional
  // Laplacian pseudo-inverse solve per coordinate.
  const VectorXd grad = stacked_gradient(cp, ref.x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cp.laplacian.entries);
  const Eigen::MatrixXd& vecs = es.eigenvectors();
  const Eigen::VectorXd& vals = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());

  ref.lambda.resize(cp.stacked_size());
  Eigen::VectorXd h(p);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < p; ++i) h(i) = grad(static_cast<Index>(i) * n + c);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < p; ++k) {
      if (vals(k) > cutoff) y += (vecs.col(k).dot(h) / vals(k)) * vecs.col(k);
    }
    for (int i = 0; i < p; ++i) ref.lambda(static_cast<Index>(i) * n + c) = y(i);
  }
  return ref;
}

double consensus_gap(const ConsensusProblem& cp, const Eigen::VectorXd& x) {
  if (x.size() != cp.stacked_size())
    throw ShapeMismatch("consensus_gap: stacked vector has wrong size");
  double gap = 0.0;
  for (const auto& [i, j] : cp.graph.topology.edges) {
    gap = std::max(gap, (x.segment(static_cast<Index>(i) * cp.n, cp.n) -
                         x.segment(static_cast<Index>(j) * cp.n, cp.n))
                            .lpNorm<Eigen::Infinity>());
  }
  return gap;
}

}  // namespace ppcm
