#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace ppcm {

enum class TopologyKind { Complete, Ring, Star, ErdosRenyi };

/// Undirected simple connected graph over agents 0..p-1.
/// Edges are stored normalized (i < j) and sorted.
struct Topology {
  int p = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int i, int j) const;
  /// Neighbor ids of every agent, each list in ascending order.
  std::vector<std::vector<int>> neighbor_lists() const;
};

/// True if every node can reach every other node.
bool is_connected(const Topology& t);

/// Builds a connected topology of the requested kind. Deterministic for a
/// fixed (kind, p, seed); seed only matters for ErdosRenyi, which resamples
/// until connected (up to 100 draws, then throws DisconnectedTopology).
Topology build_topology(TopologyKind kind, int p, std::uint64_t seed,
                        double er_prob = 0.5);

/// Symmetric nonnegative edge weights; support equals the edge set.
struct WeightedGraph {
  Topology topology;
  Eigen::MatrixXd weights;  // p x p, zero diagonal
  bool uniform = false;     // true when built by adjacency_uniform
};

/// The 1/(2p) weighting on every edge. With it the graph Laplacian has
/// spectral norm <= 1, so the coupling bound rho = 1 is valid.
WeightedGraph adjacency_uniform(const Topology& t);

/// Graph Laplacian with a precomputed spectral bound and an edge list for
/// fast block-wise application. `rho` satisfies ||L||^2 <= rho; the Kronecker
/// lift L (x) I_n has the same norm, so it bounds the stacked operator too.
struct LaplacianMatrix {
  Eigen::MatrixXd entries;  // p x p
  double rho = 1.0;
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // per-node (j, a_ij), ascending j
};

LaplacianMatrix laplacian(const WeightedGraph& g);

/// Second-smallest eigenvalue; positive iff the graph is connected.
/// Dense symmetric eigensolve, intended for validation rather than hot paths.
double algebraic_connectivity(const LaplacianMatrix& l);

/// Applies the stacked consensus operator (L (x) I_n) to x, block-wise:
/// (Ax)_i = sum_{j in N_i} a_ij (x_i - x_j). Cost O(|E| n); the Kronecker
/// product is never formed. The operator is symmetric, so this also serves
/// as the transpose.
Eigen::VectorXd apply_consensus_operator(const LaplacianMatrix& l,
                                         const Eigen::VectorXd& x, int n);

}  // namespace ppcm
