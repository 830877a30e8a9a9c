#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hdg/graph.hpp"
#include "json.hpp"

namespace hdg {

/// Auto picks Exact when the node count is within exact_threshold.
enum class DeltaMode { Exact, Sampled, Auto };

std::string to_string(DeltaMode m);
DeltaMode parse_delta_mode(const std::string& name);

struct DeltaOptions {
  DeltaMode mode = DeltaMode::Auto;
  std::uint64_t samples = 1'000'000;
  std::size_t landmarks = 512;  // sampled quadruples are drawn from this BFS-cached pool
  std::uint64_t seed = 0;
  std::size_t exact_threshold = 300;
};

struct HyperbolicityReport {
  DeltaMode mode = DeltaMode::Exact;  // never Auto
  double max_delta = 0.0;
  std::map<int, std::uint64_t> histogram;  // keyed by 2δ, so keys are integers
  std::uint64_t quadruples_examined = 0;

  nlohmann::json to_json() const;
};

/// δ of one quadruple from its six pairwise distances.
double four_point_delta(int dwx, int dyz, int dwy, int dxz, int dwz, int dxy);

/// Four-point δ over hop distances. Quadruples with an unreachable pair are
/// skipped. Exact mode throws GraphError above exact_threshold nodes. Sampled
/// mode is a lower bound on the true maximum.
HyperbolicityReport gromov_delta(const SparseGraph& graph, const DeltaOptions& opts = {});

}  // namespace hdg
