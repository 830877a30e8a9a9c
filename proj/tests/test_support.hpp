#pragma once
// Shared helpers for tests: random instances and independent oracles that do
// not go through the library's sparse or taped code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hdg/graph.hpp"
#include "hdg/matrix.hpp"

namespace hdg::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = d(rng);
  return m;
}

/// Erdős–Rényi style edge list; a spanning path is added when `connected`.
inline std::vector<Edge> random_edges(std::size_t n, double p, std::mt19937_64& rng,
                                      bool connected = false) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (coin(rng) || (connected && v == u + 1)) edges.emplace_back(u, v);
  return edges;
}

inline SparseGraph random_graph(std::size_t n, double p, std::mt19937_64& rng,
                                bool connected = false) {
  return build_graph(n, random_edges(n, p, rng, connected));
}

/// D^{-1/2}(A + I)D^{-1/2} built densely from the edge list.
inline Matrix dense_norm_adjacency(std::size_t n, const std::vector<Edge>& edges) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

/// ‖a − b‖_F / max(‖b‖_F, floor).
inline double rel_err(const Matrix& a, const Matrix& b, double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    num += d * d;
    den += b.data()[i] * b.data()[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

/// Central differences of a scalar function of one matrix argument.
inline Matrix finite_diff(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double h) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double orig = xp.data()[i];
    xp.data()[i] = orig + h;
    const double fp = f(xp);
    xp.data()[i] = orig - h;
    const double fm = f(xp);
    xp.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// All-pairs hop distances by Floyd–Warshall; -1 for unreachable.
inline std::vector<std::vector<int>> floyd_warshall(std::size_t n, const std::vector<Edge>& edges) {
  constexpr int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [u, v] : edges)
    if (u != v) d[u][v] = d[v][u] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  for (auto& row : d)
    for (int& x : row)
      if (x >= inf) x = -1;
  return d;
}

/// Brute-force four-point δ: every 4-subset, every pairing. Returns
/// (max δ, quadruple count) over subsets whose six distances are finite.
inline std::pair<double, std::size_t> brute_force_delta(std::size_t n,
                                                        const std::vector<Edge>& edges) {
  const auto d = floyd_warshall(n, edges);
  double best = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t e = c + 1; e < n; ++e) {
          const std::size_t q[4] = {a, b, c, e};
          bool ok = true;
          for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) ok = ok && d[q[i]][q[j]] >= 0;
          if (!ok) continue;
          ++count;
          std::vector<int> s{d[a][b] + d[c][e], d[a][c] + d[b][e], d[a][e] + d[b][c]};
          std::sort(s.rbegin(), s.rend());
          best = std::max(best, (s[0] - s[1]) / 2.0);
        }
  return {best, count};
}

}  // namespace hdg::testing
