#include "hdg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace hdg {

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  auto it = std::lower_bound(first, last, static_cast<NodeId>(c));
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

bool CsrMatrix::contains(std::size_t r, std::size_t c) const {
  auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  return std::binary_search(first, last, static_cast<NodeId>(c));
}

Matrix CsrMatrix::to_dense() const {
  Matrix out(rows(), rows());
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out(r, col_idx[k]) = values[k];
  return out;
}

bool SparseGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= num_nodes_ || v >= num_nodes_) return false;
  return adjacency_.contains(u, v);
}

SparseGraph build_graph(std::size_t num_nodes, std::span<const Edge> edge_list) {
  SparseGraph g;
  g.num_nodes_ = num_nodes;

  std::vector<Edge> undirected;
  undirected.reserve(edge_list.size());
  for (const auto& [u, v] : edge_list) {
    if (u >= num_nodes || v >= num_nodes) {
      throw GraphError("build_graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    undirected.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(undirected.begin(), undirected.end());
  undirected.erase(std::unique(undirected.begin(), undirected.end()), undirected.end());
  g.edges_ = std::move(undirected);

  std::vector<std::vector<NodeId>> adj(num_nodes);
  for (const auto& [u, v] : g.edges_) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }

  auto& a = g.adjacency_;
  a.row_ptr.assign(num_nodes + 1, 0);
  for (std::size_t u = 0; u < num_nodes; ++u) {
    std::sort(adj[u].begin(), adj[u].end());
    a.row_ptr[u + 1] = a.row_ptr[u] + adj[u].size();
  }
  a.col_idx.reserve(a.row_ptr.back());
  for (const auto& row : adj) a.col_idx.insert(a.col_idx.end(), row.begin(), row.end());
  a.values.assign(a.col_idx.size(), 1.0);

  // Â = D^{-1/2}(A + I)D^{-1/2}, degrees taken from A + I.
  std::vector<double> deg1(num_nodes);
  for (std::size_t u = 0; u < num_nodes; ++u) deg1[u] = static_cast<double>(adj[u].size() + 1);

  auto& n = g.norm_adjacency_;
  n.row_ptr.assign(num_nodes + 1, 0);
  n.col_idx.reserve(a.nnz() + num_nodes);
  n.values.reserve(a.nnz() + num_nodes);
  for (std::size_t u = 0; u < num_nodes; ++u) {
    bool self_done = false;
    auto push = [&](NodeId v) {
      n.col_idx.push_back(v);
      n.values.push_back(1.0 / std::sqrt(deg1[u] * deg1[v]));
    };
    for (NodeId v : adj[u]) {
      if (!self_done && v > u) {
        push(static_cast<NodeId>(u));
        self_done = true;
      }
      push(v);
    }
    if (!self_done) push(static_cast<NodeId>(u));
    n.row_ptr[u + 1] = n.col_idx.size();
  }
  return g;
}

Matrix spmm(const CsrMatrix& a, const Matrix& x) {
  if (x.rows() != a.rows()) {
    throw ShapeError("spmm: graph has " + std::to_string(a.rows()) + " nodes, features " +
                     x.shape_string());
  }
  const std::size_t c = x.cols();
  Matrix out(x.rows(), c);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* o = out.data().data() + r * c;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const double w = a.values[k];
      const double* xr = x.data().data() + static_cast<std::size_t>(a.col_idx[k]) * c;
      for (std::size_t j = 0; j < c; ++j) o[j] += w * xr[j];
    }
  }
  return out;
}

Matrix spmm(const SparseGraph& graph, const Matrix& x) { return spmm(graph.norm_adjacency(), x); }

std::vector<std::uint32_t> bfs_distances(const SparseGraph& graph, NodeId source) {
  if (source >= graph.num_nodes()) {
    throw GraphError("bfs_distances: source " + std::to_string(source) + " out of range");
  }
  std::vector<std::uint32_t> dist(graph.num_nodes(), kUnreachable);
  std::deque<NodeId> frontier{source};
  dist[source] = 0;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : graph.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

std::vector<std::uint32_t> connected_components(const SparseGraph& graph) {
  std::vector<std::uint32_t> comp(graph.num_nodes(), kUnreachable);
  std::uint32_t next = 0;
  std::vector<NodeId> stack;
  for (std::size_t s = 0; s < graph.num_nodes(); ++s) {
    if (comp[s] != kUnreachable) continue;
    comp[s] = next;
    stack.push_back(static_cast<NodeId>(s));
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : graph.neighbors(u)) {
        if (comp[v] == kUnreachable) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

SparseGraph permute_graph(const SparseGraph& graph, std::span<const NodeId> perm) {
  if (perm.size() != graph.num_nodes()) throw GraphError("permute_graph: permutation size mismatch");
  std::vector<Edge> edges;
  edges.reserve(graph.num_edges());
  for (const auto& [u, v] : graph.edges()) edges.emplace_back(perm[u], perm[v]);
  return build_graph(graph.num_nodes(), edges);
}

Matrix permute_rows(const Matrix& x, std::span<const NodeId> perm) {
  if (perm.size() != x.rows()) throw ShapeError("permute_rows: permutation size mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t u = 0; u < x.rows(); ++u)
    std::copy(x.row(u).begin(), x.row(u).end(), out.row(perm[u]).begin());
  return out;
}

double dirichlet_energy(const SparseGraph& graph, const Matrix& x) {
  if (x.rows() != graph.num_nodes()) throw ShapeError("dirichlet_energy: row count mismatch");
  double acc = 0.0;
  for (const auto& [u, v] : graph.edges()) {
    const auto xu = x.row(u);
    const auto xv = x.row(v);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double d = xu[j] - xv[j];
      acc += d * d;
    }
  }
  return 0.5 * acc;
}

}  // namespace hdg
