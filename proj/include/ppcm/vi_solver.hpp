#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ppcm/problems.hpp"

namespace ppcm {

// Primal-dual solver for the saddle-point reformulation of the consensus
// problem: find u = (x, lambda) with x in the product of agent sets and
// lambda free, such that u solves the monotone variational inequality of
// the operator F(u) = (g(x) - A^T lambda; Ax - rhs), A = L (x) I_n.
//
// Each iteration runs a projection-based prediction with per-agent scaling
// r_i, a self-tuning acceptance test on the gradient ratio mu_i, and a
// projected correction with either a unit step or the adaptive relaxed step
// gamma * alpha*.

/// The iterate u = (x; lambda), both stacked as p blocks of size n.
struct PrimalDualPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
};

/// Per-agent scaling pair (r_i, s_i). The dual factors stay hard-coupled at
/// s_i = eta^2 r_i / rho, the largest dual step the acceptance test admits;
/// rho bounds the squared norm of the consensus operator.
struct ScalingState {
  Eigen::VectorXd r;
  Eigen::VectorXd s;
  double eta = 0.9;
  double rho = 1.0;

  static ScalingState init(int p, double r_init, double eta, double rho);
  void recouple();
};

enum class StepMode { Unit, Adaptive };
enum class TerminationStatus { Converged, MaxItersExceeded };

struct SolverConfig {
  double eta = 0.9;
  double gamma = 1.9;  // relaxation of the adaptive step; ignored in unit mode
  StepMode step_mode = StepMode::Unit;
  double tol = 1e-3;
  int max_iters = 10000;
  int max_inner_retries = 50;
  double r_init = 1.0;
  double r_max = 1e12;
  bool record_iterates = false;
};

struct IterationDiagnostics {
  int iter = 0;
  Eigen::VectorXd mu;  // accepted per-agent gradient ratios
  double alpha_star = std::numeric_limits<double>::quiet_NaN();
  double e_stop = 0.0;          // max over agents of the local stopping error
  double pred_distance = 0.0;   // ||u - u_tilde|| in the iteration's H-norm
  double max_r = 0.0;           // largest per-agent scaling this iteration
  std::optional<double> contraction_slack;
  double objective = 0.0;
  double consensus_gap = 0.0;
  int inner_retries = 0;
};

struct RunReport {
  std::string method;
  SolverConfig config;
  TerminationStatus status = TerminationStatus::MaxItersExceeded;
  int total_iters = 0;
  double final_e = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
  std::vector<IterationDiagnostics> iterations;
  std::vector<PrimalDualPoint> trajectory;  // u^0, u^1, ... when recording

  bool converged() const { return status == TerminationStatus::Converged; }
};

/// Feasible default start: primal blocks are the projections of zero,
/// dual blocks are zero.
PrimalDualPoint make_start_point(const ConsensusProblem& cp);

/// F(u) = (g(x) - A^T lambda; Ax - rhs), stacked (x part first, 2*p*n total).
Eigen::VectorXd apply_operator(const ConsensusProblem& cp, const PrimalDualPoint& u);

/// ||(dx; dl)||_H = sqrt(sum_i r_i|dx_i|^2 + sum_i |dl_i|^2 / s_i).
double h_norm(const ScalingState& sc, const Eigen::VectorXd& dx,
              const Eigen::VectorXd& dl, int n);

/// Predictor: x~ = P_X[x - R^{-1}(g(x) - A^T lambda)], then the dual step
/// lambda~ = lambda - S(A x~ - rhs), which is sequential on purpose (the dual
/// prediction sees the fresh primal predictor; the dual space is all of R^n
/// per agent, so no dual projection is needed).
PrimalDualPoint predict(const PrimalDualPoint& u, const ConsensusProblem& cp,
                        const ScalingState& sc);

struct CriterionResult {
  bool holds = false;
  Eigen::VectorXd mu;
};

/// Per-agent acceptance test mu_i = |g_i(x_i) - g_i(x~_i)| / (r_i |x_i - x~_i|)
/// <= eta, the sufficient split of the H-norm criterion (the dual half is
/// enforced by the s-coupling). mu_i is 0 when x_i == x~_i exactly.
CriterionResult criterion_holds(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                                const ScalingState& sc, const Eigen::VectorXd& grad_x,
                                const Eigen::VectorXd& grad_x_tilde, int n);

/// Multiplies violators' r_i by 1.5 * max(1, mu_i). Throws ScalingOverflow
/// past r_max.
ScalingState adjust_r_up(const ScalingState& sc, const Eigen::VectorXd& mu,
                         double r_max = 1e12);

/// After a correction, agents with mu_i <= 0.5 shrink r_i by mu_i / 0.7,
/// floored at 1e-12 so a zero ratio cannot zero out the scaling.
ScalingState adjust_r_down(const ScalingState& sc, const Eigen::VectorXd& mu);

/// xi = ((g(x) - g(x~)) - A^T(lambda - lambda~); 0), stacked.
Eigen::VectorXd assemble_xi(const ConsensusProblem& cp, const PrimalDualPoint& u,
                            const PrimalDualPoint& u_tilde,
                            const Eigen::VectorXd& grad_x,
                            const Eigen::VectorXd& grad_x_tilde);

/// Search direction d = H(u - u~) - xi, stacked.
Eigen::VectorXd direction(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                          const ScalingState& sc, const Eigen::VectorXd& xi, int n);

/// Maximizer of the per-iteration progress bound:
/// alpha* = (u - u~)^T d / (d^T H^{-1} d). Exceeds 1/2 whenever the
/// acceptance test held and u != u~. Throws DegeneratePrediction on d = 0
/// with u != u~.
double alpha_star(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                  const ScalingState& sc, const Eigen::VectorXd& d, int n);

/// Corrector: x+ = P_X[x - alpha R^{-1}(g(x~) - A^T lambda~)],
/// lambda+ = lambda - alpha S(A x~ - rhs). At alpha = 1 the dual update
/// reproduces the predictor's dual bitwise.
PrimalDualPoint correct(const PrimalDualPoint& u, const PrimalDualPoint& u_tilde,
                        const ConsensusProblem& cp, const ScalingState& sc,
                        double alpha);

/// Full loop: self-tuning prediction, correction (unit or gamma * alpha*),
/// post-step r decrease, stop when the max local error E <= tol. Never
/// throws on slow convergence; a run that exhausts max_iters comes back
/// flagged MaxItersExceeded with the best iterate.
/// With a reference solution, adaptive runs record the per-iteration
/// contraction slack (measured progress minus the guaranteed amount).
std::pair<PrimalDualPoint, RunReport> solve(const ConsensusProblem& cp,
                                            const SolverConfig& cfg,
                                            PrimalDualPoint u0,
                                            const PrimalDualPoint* reference = nullptr);

/// Solution certificate ||u - P_Omega[u - F(u)]||_inf; zero exactly at
/// solutions of the variational inequality.
double vi_residual(const PrimalDualPoint& u, const ConsensusProblem& cp);

/// Fixed-step extragradient reference solver:
/// u~ = P[u - beta F(u)], u+ = P[u - beta F(u~)], stop on ||u - u~||_inf.
std::pair<PrimalDualPoint, RunReport> extragradient_solve(const ConsensusProblem& cp,
                                                          double beta, double tol,
                                                          int max_iters,
                                                          PrimalDualPoint u0);

/// Builds the reference point for contraction diagnostics from a known
/// minimizer block: x* replicated across agents, and the minimum-norm
/// multiplier solving A^T lambda* = g(x*) (block-wise Laplacian
/// pseudo-inverse). Valid for unconstrained agent sets; callers should
/// check vi_residual before trusting it.
PrimalDualPoint build_reference_point(const ConsensusProblem& cp,
                                      const Eigen::VectorXd& x_star_block);

/// Max over edges of ||x_i - x_j||_inf for a stacked primal vector.
double consensus_gap(const ConsensusProblem& cp, const Eigen::VectorXd& x);

}  // namespace ppcm
