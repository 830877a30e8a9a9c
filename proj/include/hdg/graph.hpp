#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "hdg/matrix.hpp"

namespace hdg {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Compressed sparse row layout. Column indices within a row are ascending.
struct CsrMatrix {
  std::vector<std::size_t> row_ptr;
  std::vector<NodeId> col_idx;
  std::vector<double> values;

  std::size_t rows() const { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
  std::size_t nnz() const { return col_idx.size(); }
  /// Value at (r, c), or 0 when the entry is not stored.
  double at(std::size_t r, std::size_t c) const;
  bool contains(std::size_t r, std::size_t c) const;
  Matrix to_dense() const;
};

/// Immutable undirected graph. Holds the binary adjacency A and the
/// propagation matrix Â = D^{-1/2}(A + I)D^{-1/2}. Self-loops never appear in
/// `edges()`; they exist only through the +I of the normalization.
class SparseGraph {
 public:
  SparseGraph() = default;

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  /// Undirected edges with u < v, sorted.
  const std::vector<Edge>& edges() const { return edges_; }
  const CsrMatrix& adjacency() const { return adjacency_; }
  const CsrMatrix& norm_adjacency() const { return norm_adjacency_; }

  std::size_t degree(NodeId u) const { return adjacency_.row_ptr[u + 1] - adjacency_.row_ptr[u]; }
  std::span<const NodeId> neighbors(NodeId u) const {
    return {adjacency_.col_idx.data() + adjacency_.row_ptr[u], degree(u)};
  }
  bool has_edge(NodeId u, NodeId v) const;

  friend SparseGraph build_graph(std::size_t num_nodes, std::span<const Edge> edge_list);

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  CsrMatrix adjacency_;
  CsrMatrix norm_adjacency_;
};

/// Builds a graph from an arbitrary edge list: orientation and duplicates are
/// folded, self-edges dropped. Throws GraphError naming an out-of-range pair.
SparseGraph build_graph(std::size_t num_nodes, std::span<const Edge> edge_list);

inline SparseGraph build_graph(std::size_t num_nodes, std::initializer_list<Edge> edge_list) {
  return build_graph(num_nodes, std::span<const Edge>(edge_list.begin(), edge_list.size()));
}

/// Â X with per-row ascending column summation.
Matrix spmm(const SparseGraph& graph, const Matrix& x);
Matrix spmm(const CsrMatrix& a, const Matrix& x);

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

/// Hop distances from `source`; unreachable nodes hold kUnreachable.
std::vector<std::uint32_t> bfs_distances(const SparseGraph& graph, NodeId source);

/// Connected-component id per node, numbered in order of lowest member.
std::vector<std::uint32_t> connected_components(const SparseGraph& graph);

/// Relabels nodes: node u of `graph` becomes perm[u].
SparseGraph permute_graph(const SparseGraph& graph, std::span<const NodeId> perm);
/// Row u of `x` becomes row perm[u].
Matrix permute_rows(const Matrix& x, std::span<const NodeId> perm);

/// ½ Σ_{(u,v)∈E} ‖x_u − x_v‖².
double dirichlet_energy(const SparseGraph& graph, const Matrix& x);

}  // namespace hdg
