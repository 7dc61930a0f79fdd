#include "ppcm/problems.hpp"

#include <cmath>
#include <numbers>

#include "ppcm/errors.hpp"

namespace ppcm {

ConsensusProblem make_consensus_problem(std::vector<AgentProblem> agents,
                                        WeightedGraph graph) {
  if (agents.size() < 2)
    throw InvalidDimensions("consensus problem: need at least 2 agents");
  if (static_cast<int>(agents.size()) != graph.topology.p)
    throw ShapeMismatch("consensus problem: agent count does not match topology");
  if (!is_connected(graph.topology))
    throw DisconnectedTopology("consensus problem: topology must be connected");

  ConsensusProblem cp;
  cp.n = agents.front().objective->dim();
  for (const auto& a : agents) {
    if (a.objective->dim() != cp.n || dimension(a.set) != cp.n)
      throw ShapeMismatch("consensus problem: agent dimensions differ");
  }
  cp.laplacian = laplacian(graph);
  cp.graph = std::move(graph);
  cp.agents = std::move(agents);
  cp.constraint_rhs = Eigen::VectorXd::Zero(cp.stacked_size());
  return cp;
}

double consensus_objective(const ConsensusProblem& cp, const Eigen::VectorXd& x) {
  if (x.size() != cp.stacked_size())
    throw ShapeMismatch("consensus objective: stacked vector has wrong size");
  double total = 0.0;
  for (int i = 0; i < cp.p(); ++i)
    total += cp.agents[static_cast<std::size_t>(i)].objective->value(
        x.segment(static_cast<Eigen::Index>(i) * cp.n, cp.n));
  return total;
}

Eigen::VectorXd stacked_gradient(const ConsensusProblem& cp, const Eigen::VectorXd& x) {
  if (x.size() != cp.stacked_size())
    throw ShapeMismatch("stacked gradient: stacked vector has wrong size");
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < cp.p(); ++i)
    g.segment(static_cast<Eigen::Index>(i) * cp.n, cp.n) =
        cp.agents[static_cast<std::size_t>(i)].objective->gradient(
            x.segment(static_cast<Eigen::Index>(i) * cp.n, cp.n));
  return g;
}

Eigen::VectorXd project_stacked(const ConsensusProblem& cp, const Eigen::VectorXd& x) {
  if (x.size() != cp.stacked_size())
    throw ShapeMismatch("project_stacked: stacked vector has wrong size");
  Eigen::VectorXd out(x.size());
  for (int i = 0; i < cp.p(); ++i)
    out.segment(static_cast<Eigen::Index>(i) * cp.n, cp.n) =
        project(cp.agents[static_cast<std::size_t>(i)].set,
                x.segment(static_cast<Eigen::Index>(i) * cp.n, cp.n));
  return out;
}

double GaussianSampler::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller on raw 53-bit uniforms; u1 is kept away from zero.
  const double u1 =
      (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

namespace {

std::vector<std::pair<int, int>> near_equal_partition(int m, int p) {
  std::vector<std::pair<int, int>> ranges;
  ranges.reserve(static_cast<std::size_t>(p));
  const int base = m / p;
  const int extra = m % p;  // first `extra` blocks get one more row
  int row = 0;
  for (int i = 0; i < p; ++i) {
    const int size = base + (i < extra ? 1 : 0);
    ranges.emplace_back(row, row + size);
    row += size;
  }
  return ranges;
}

}  // namespace

std::pair<LsqInstance, ConsensusProblem> generate_lsq(int m, int n, int p,
                                                      std::uint64_t seed) {
  return generate_lsq(m, n, p, seed, build_topology(TopologyKind::Complete, p, seed));
}

std::pair<LsqInstance, ConsensusProblem> generate_lsq(int m, int n, int p,
                                                      std::uint64_t seed,
                                                      const Topology& topology) {
  if (m < n || n < 1 || p < 2 || m < p)
    throw InvalidDimensions("generate_lsq: require m >= n >= 1, p >= 2, m >= p");
  if (topology.p != p)
    throw ShapeMismatch("generate_lsq: topology size does not match p");

  LsqInstance inst;
  inst.seed = seed;
  inst.B.resize(m, n);
  inst.b.resize(m);
  GaussianSampler gauss(seed);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) inst.B(i, j) = gauss.next();
  for (int i = 0; i < m; ++i) inst.b(i) = gauss.next();
  inst.partition = near_equal_partition(m, p);

  return {inst, lsq_consensus_problem(inst, topology)};
}

ConsensusProblem lsq_consensus_problem(const LsqInstance& inst,
                                       const Topology& topology,
                                       const ConvexSet* shared_set) {
  const int n = static_cast<int>(inst.B.cols());
  std::vector<AgentProblem> agents;
  agents.reserve(inst.partition.size());
  for (std::size_t i = 0; i < inst.partition.size(); ++i) {
    const auto [begin, end] = inst.partition[i];
    AgentProblem a;
    a.agent_id = static_cast<int>(i);
    a.objective = std::make_shared<QuadraticObjective>(
        inst.B.middleRows(begin, end - begin), inst.b.segment(begin, end - begin));
    a.set = shared_set ? *shared_set : ConvexSet(WholeSpace{n});
    agents.push_back(std::move(a));
  }
  return make_consensus_problem(std::move(agents), adjacency_uniform(topology));
}

Eigen::VectorXd oracle_solve(const LsqInstance& inst) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(inst.B);
  if (qr.rank() < inst.B.cols())
    throw RankDeficient("oracle_solve: matrix is column-rank-deficient");
  return qr.solve(inst.b);
}

std::pair<LsqInstance, ConsensusProblem> toy_problem() {
  LsqInstance inst;
  inst.B = Eigen::MatrixXd::Ones(2, 1);
  inst.b = Eigen::Vector2d(1.0, 3.0);
  inst.partition = {{0, 1}, {1, 2}};
  inst.seed = 0;
  const Topology t = build_topology(TopologyKind::Complete, 2, 0);
  return {inst, lsq_consensus_problem(inst, t)};
}

}  // namespace ppcm
