#include "ppcm/graph.hpp"

#include <algorithm>
#include <queue>
#include <random>

#include "ppcm/errors.hpp"

namespace ppcm {

namespace {

// Uniform double in [0,1) from the raw 64-bit stream, so the edge draws do
// not depend on the standard library's distribution implementation.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void normalize_edges(std::vector<std::pair<int, int>>& edges) {
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

bool Topology::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

std::vector<std::vector<int>> Topology::neighbor_lists() const {
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(p));
  for (const auto& [i, j] : edges) {
    nbrs[static_cast<std::size_t>(i)].push_back(j);
    nbrs[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& list : nbrs) std::sort(list.begin(), list.end());
  return nbrs;
}

bool is_connected(const Topology& t) {
  if (t.p <= 0) return false;
  if (t.p == 1) return true;
  const auto nbrs = t.neighbor_lists();
  std::vector<char> seen(static_cast<std::size_t>(t.p), 0);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int w : nbrs[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        queue.push(w);
      }
    }
  }
  return reached == t.p;
}

Topology build_topology(TopologyKind kind, int p, std::uint64_t seed,
                        double er_prob) {
  if (p < 2) throw InvalidDimensions("build_topology: need at least 2 agents");
  Topology t;
  t.p = p;
  switch (kind) {
    case TopologyKind::Complete:
      for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) t.edges.emplace_back(i, j);
      break;
    case TopologyKind::Ring:
      if (p == 2) {
        t.edges.emplace_back(0, 1);
      } else {
        for (int i = 0; i < p; ++i) t.edges.emplace_back(i, (i + 1) % p);
      }
      break;
    case TopologyKind::Star:
      for (int i = 1; i < p; ++i) t.edges.emplace_back(0, i);
      break;
    case TopologyKind::ErdosRenyi: {
      if (!(er_prob > 0.0 && er_prob <= 1.0))
        throw InvalidDimensions("build_topology: edge probability must be in (0,1]");
      std::mt19937_64 rng(seed);
      constexpr int kMaxDraws = 100;
      for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
        t.edges.clear();
        for (int i = 0; i < p; ++i)
          for (int j = i + 1; j < p; ++j)
            if (uniform01(rng) < er_prob) t.edges.emplace_back(i, j);
        if (is_connected(t)) break;
        t.edges.clear();
      }
      if (t.edges.empty())
        throw DisconnectedTopology(
            "build_topology: no connected Erdos-Renyi draw in 100 attempts");
      break;
    }
  }
  normalize_edges(t.edges);
  return t;
}

WeightedGraph adjacency_uniform(const Topology& t) {
  WeightedGraph g;
  g.topology = t;
  g.uniform = true;
  g.weights = Eigen::MatrixXd::Zero(t.p, t.p);
  const double w = 1.0 / (2.0 * static_cast<double>(t.p));
  for (const auto& [i, j] : t.edges) {
    g.weights(i, j) = w;
    g.weights(j, i) = w;
  }
  return g;
}

LaplacianMatrix laplacian(const WeightedGraph& g) {
  const int p = g.topology.p;
  LaplacianMatrix l;
  l.entries = Eigen::MatrixXd::Zero(p, p);
  l.adjacency.assign(static_cast<std::size_t>(p), {});
  for (const auto& [i, j] : g.topology.edges) {
    const double w = g.weights(i, j);
    l.entries(i, j) = -w;
    l.entries(j, i) = -w;
    l.entries(i, i) += w;
    l.entries(j, j) += w;
    l.adjacency[static_cast<std::size_t>(i)].emplace_back(j, w);
    l.adjacency[static_cast<std::size_t>(j)].emplace_back(i, w);
  }
  for (auto& list : l.adjacency) std::sort(list.begin(), list.end());
  if (g.uniform) {
    l.rho = 1.0;
  } else {
    // Gershgorin disc bound: ||L|| <= 2 max_i l_ii. Can be loose.
    const double bound = 2.0 * l.entries.diagonal().maxCoeff();
    l.rho = bound * bound;
  }
  return l;
}

double algebraic_connectivity(const LaplacianMatrix& l) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l.entries,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(1);  // eigenvalues come back ascending
}

Eigen::VectorXd apply_consensus_operator(const LaplacianMatrix& l,
                                         const Eigen::VectorXd& x, int n) {
  const int p = static_cast<int>(l.adjacency.size());
  if (n < 1 || x.size() != static_cast<Eigen::Index>(p) * n)
    throw ShapeMismatch("apply_consensus_operator: expected p blocks of size n");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (int i = 0; i < p; ++i) {
    auto acc = out.segment(static_cast<Eigen::Index>(i) * n, n);
    const auto xi = x.segment(static_cast<Eigen::Index>(i) * n, n);
    for (const auto& [j, w] : l.adjacency[static_cast<std::size_t>(i)]) {
      acc += w * (xi - x.segment(static_cast<Eigen::Index>(j) * n, n));
    }
  }
  return out;
}

}  // namespace ppcm
