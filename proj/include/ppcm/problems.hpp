#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "ppcm/convex_set.hpp"
#include "ppcm/graph.hpp"
#include "ppcm/objective.hpp"

namespace ppcm {

/// One agent's private objective and constraint set.
struct AgentProblem {
  int agent_id = 0;
  std::shared_ptr<const Objective> objective;
  ConvexSet set;
};

/// The networked problem: minimize sum_i f_i(x_i) subject to every pair of
/// neighbors agreeing (the stacked constraint (L (x) I_n) x = rhs with
/// rhs = 0), each block constrained to its agent's set.
struct ConsensusProblem {
  std::vector<AgentProblem> agents;
  WeightedGraph graph;
  LaplacianMatrix laplacian;
  int n = 0;                        // per-agent block size
  Eigen::VectorXd constraint_rhs;   // p*n, zero for plain consensus

  int p() const { return static_cast<int>(agents.size()); }
  Eigen::Index stacked_size() const { return static_cast<Eigen::Index>(p()) * n; }
};

/// Validates shapes and connectivity, builds the Laplacian, zero rhs.
ConsensusProblem make_consensus_problem(std::vector<AgentProblem> agents,
                                        WeightedGraph graph);

/// sum_i f_i(x_i) over the stacked vector.
double consensus_objective(const ConsensusProblem& cp, const Eigen::VectorXd& x);

/// Stacked per-agent gradients (g_1(x_1); ...; g_p(x_p)).
Eigen::VectorXd stacked_gradient(const ConsensusProblem& cp, const Eigen::VectorXd& x);

/// Block-wise projection of a stacked primal vector onto X_1 x ... x X_p.
Eigen::VectorXd project_stacked(const ConsensusProblem& cp, const Eigen::VectorXd& x);

/// A full least-squares system split row-wise across agents.
struct LsqInstance {
  Eigen::MatrixXd B;  // m x n
  Eigen::VectorXd b;  // m
  std::vector<std::pair<int, int>> partition;  // [begin, end) row ranges, one per agent
  std::uint64_t seed = 0;
};

/// Standard normal draws with a fully specified stream (raw mt19937_64 bits
/// plus Box-Muller), so generated instances are identical across platforms.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}
  double next();

 private:
  std::mt19937_64 rng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Gaussian instance of the experiment: B (row-major fill), then b; rows
/// split into p contiguous blocks of near-equal size (larger blocks first).
/// The consensus problem uses the given topology (complete by default) with
/// uniform 1/(2p) weights and unconstrained agent sets.
std::pair<LsqInstance, ConsensusProblem> generate_lsq(int m, int n, int p,
                                                      std::uint64_t seed);
std::pair<LsqInstance, ConsensusProblem> generate_lsq(int m, int n, int p,
                                                      std::uint64_t seed,
                                                      const Topology& topology);

/// Restacks the per-agent blocks of an instance into a consensus problem,
/// optionally constraining every agent to the same set.
ConsensusProblem lsq_consensus_problem(const LsqInstance& inst,
                                       const Topology& topology,
                                       const ConvexSet* shared_set = nullptr);

/// Reference solution x* = argmin 1/2||Bx - b||^2 via a rank-revealing QR
/// of B. Throws RankDeficient when B is numerically column-rank-deficient.
Eigen::VectorXd oracle_solve(const LsqInstance& inst);

/// The p=2, n=1 sanity problem: f_1(x) = (x-1)^2/2, f_2(x) = (x-3)^2/2 on a
/// complete graph. Its consensus optimum is x = 2.
std::pair<LsqInstance, ConsensusProblem> toy_problem();

}  // namespace ppcm
