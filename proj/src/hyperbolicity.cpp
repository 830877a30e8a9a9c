#include "hdg/hyperbolicity.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "hdg/errors.hpp"

namespace hdg {

std::string to_string(DeltaMode m) {
  switch (m) {
    case DeltaMode::Exact: return "exact";
    case DeltaMode::Sampled: return "sampled";
    case DeltaMode::Auto: return "auto";
  }
  return "?";
}

DeltaMode parse_delta_mode(const std::string& name) {
  if (name == "exact") return DeltaMode::Exact;
  if (name == "sampled") return DeltaMode::Sampled;
  if (name == "auto") return DeltaMode::Auto;
  throw ConfigError("unknown delta mode '" + name + "' (expected exact, sampled, auto)");
}

nlohmann::json HyperbolicityReport::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [twice, count] : histogram) hist.push_back({{"delta", twice / 2.0}, {"count", count}});
  return {{"schema_version", 1},
          {"mode", to_string(mode)},
          {"max_delta", max_delta},
          {"quadruples_examined", quadruples_examined},
          {"histogram", hist}};
}

namespace {

// Twice the four-point defect, kept integral.
inline int twice_delta(int s1, int s2, int s3) {
  int a = s1, b = s2, c = s3;
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  return a - b;
}

constexpr int kNone = -1;

void finish(HyperbolicityReport& r) {
  r.max_delta = r.histogram.empty() ? 0.0 : r.histogram.rbegin()->first / 2.0;
}

HyperbolicityReport exact(const SparseGraph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<int>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto dist = bfs_distances(g, static_cast<NodeId>(i));
    d[i].resize(n);
    for (std::size_t j = 0; j < n; ++j)
      d[i][j] = dist[j] == kUnreachable ? kNone : static_cast<int>(dist[j]);
  }
  HyperbolicityReport r;
  r.mode = DeltaMode::Exact;
  std::vector<std::uint64_t> counts;
  for (std::size_t w = 0; w < n; ++w) {
    for (std::size_t x = w + 1; x < n; ++x) {
      const int dwx = d[w][x];
      if (dwx == kNone) continue;
      for (std::size_t y = x + 1; y < n; ++y) {
        const int dwy = d[w][y], dxy = d[x][y];
        if (dwy == kNone) continue;
        const auto& dy = d[y];
        for (std::size_t z = y + 1; z < n; ++z) {
          const int dyz = dy[z];
          if (dyz == kNone) continue;
          const int t = twice_delta(dwx + dyz, dwy + d[x][z], d[w][z] + dxy);
          if (static_cast<std::size_t>(t) >= counts.size()) counts.resize(t + 1, 0);
          ++counts[t];
        }
      }
    }
  }
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t]) r.histogram[static_cast<int>(t)] = counts[t];
    r.quadruples_examined += counts[t];
  }
  finish(r);
  return r;
}

HyperbolicityReport sampled(const SparseGraph& g, const DeltaOptions& opts) {
  const std::size_t n = g.num_nodes();
  HyperbolicityReport r;
  r.mode = DeltaMode::Sampled;
  if (n < 4) return r;

  std::mt19937_64 rng(opts.seed);
  std::vector<NodeId> pool(n);
  std::iota(pool.begin(), pool.end(), NodeId{0});
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::max<std::size_t>(4, std::min(opts.landmarks, n)));

  const std::size_t m = pool.size();
  std::vector<std::vector<int>> d(m, std::vector<int>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto dist = bfs_distances(g, pool[i]);
    for (std::size_t j = 0; j < m; ++j)
      d[i][j] = dist[pool[j]] == kUnreachable ? kNone : static_cast<int>(dist[pool[j]]);
  }

  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  for (std::uint64_t s = 0; s < opts.samples; ++s) {
    std::size_t q[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        q[k] = pick(rng);
        fresh = std::find(q, q + k, q[k]) == q + k;
      } while (!fresh);
    }
    const auto [w, x, y, z] = q;
    const int pairs[6] = {d[w][x], d[y][z], d[w][y], d[x][z], d[w][z], d[x][y]};
    if (std::find(std::begin(pairs), std::end(pairs), kNone) != std::end(pairs)) continue;
    ++r.histogram[twice_delta(pairs[0] + pairs[1], pairs[2] + pairs[3], pairs[4] + pairs[5])];
    ++r.quadruples_examined;
  }
  finish(r);
  return r;
}

}  // namespace

double four_point_delta(int dwx, int dyz, int dwy, int dxz, int dwz, int dxy) {
  return twice_delta(dwx + dyz, dwy + dxz, dwz + dxy) / 2.0;
}

HyperbolicityReport gromov_delta(const SparseGraph& graph, const DeltaOptions& opts) {
  DeltaMode mode = opts.mode;
  if (mode == DeltaMode::Auto)
    mode = graph.num_nodes() <= opts.exact_threshold ? DeltaMode::Exact : DeltaMode::Sampled;
  if (mode == DeltaMode::Exact) {
    if (graph.num_nodes() > opts.exact_threshold) {
      throw GraphError("exact delta needs at most " + std::to_string(opts.exact_threshold) +
                       " nodes, graph has " + std::to_string(graph.num_nodes()));
    }
    return exact(graph);
  }
  return sampled(graph, opts);
}

}  // namespace hdg
