#include "doctest.h"
#include "hdg/data.hpp"
#include "hdg/errors.hpp"
#include "hdg/hyperbolicity.hpp"
#include "test_support.hpp"

using namespace hdg;
using namespace hdg::testing;

namespace {

DeltaOptions exact() {
  DeltaOptions o;
  o.mode = DeltaMode::Exact;
  return o;
}

std::vector<Edge> cycle_edges(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u) e.emplace_back(u, static_cast<NodeId>((u + 1) % n));
  return e;
}

}  // namespace

TEST_CASE("four-point delta of a single quadruple") {
  // C4 quadruple (0,1,2,3): sums 2, 4, 2.
  CHECK(four_point_delta(1, 1, 2, 2, 1, 1) == 1.0);
  CHECK(four_point_delta(1, 1, 1, 1, 1, 1) == 0.0);
  CHECK(four_point_delta(3, 2, 2, 2, 2, 2) == 0.5);
}

TEST_CASE("path and cycle") {
  const auto p4 = gromov_delta(build_graph(4, {{0, 1}, {1, 2}, {2, 3}}), exact());
  CHECK(p4.max_delta == 0.0);
  CHECK(p4.quadruples_examined == 1);
  CHECK(p4.mode == DeltaMode::Exact);

  const auto c4 = gromov_delta(build_graph(4, cycle_edges(4)), exact());
  CHECK(c4.max_delta == 1.0);
  CHECK(c4.histogram == std::map<int, std::uint64_t>{{2, 1}});
}

TEST_CASE("exact mode matches the brute-force oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 4 + rng() % 9;
    const double p = 0.15 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
    const auto edges = random_edges(n, p, rng, trial % 2 == 0);
    const auto [delta, count] = brute_force_delta(n, edges);
    const auto rep = gromov_delta(build_graph(n, edges), exact());
    CHECK(rep.max_delta == delta);
    CHECK(rep.quadruples_examined == count);
    std::uint64_t total = 0;
    for (const auto& [twice, c] : rep.histogram) total += c;
    CHECK(total == count);
  }
}

TEST_CASE("all deltas are non-negative half integers") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseGraph g = random_graph(10 + rng() % 10, 0.2, rng, true);
    const auto rep = gromov_delta(g, exact());
    CHECK(rep.max_delta >= 0.0);
    CHECK(2.0 * rep.max_delta == std::floor(2.0 * rep.max_delta));
    for (const auto& [twice, c] : rep.histogram) CHECK(twice >= 0);
    CHECK(rep.histogram.rbegin()->first == static_cast<int>(2.0 * rep.max_delta));
  }
}

TEST_CASE("trees are zero-hyperbolic in both modes") {
  const SparseGraph t = generate_tree({7, 2}).graph;
  CHECK(gromov_delta(t, exact()).max_delta == 0.0);
  DeltaOptions s;
  s.mode = DeltaMode::Sampled;
  s.samples = 20000;
  s.landmarks = 64;
  const auto rep = gromov_delta(t, s);
  CHECK(rep.mode == DeltaMode::Sampled);
  CHECK(rep.max_delta == 0.0);
  CHECK(rep.quadruples_examined > 0);
}

TEST_CASE("sampled mode is a deterministic lower bound") {
  const SparseGraph g = build_graph(40, cycle_edges(40));
  const double truth = gromov_delta(g, exact()).max_delta;
  CHECK(truth == 10.0);
  DeltaOptions s;
  s.mode = DeltaMode::Sampled;
  s.samples = 5000;
  s.seed = 3;
  const auto a = gromov_delta(g, s);
  CHECK(a.max_delta <= truth);
  CHECK(a.max_delta > 0.0);
  CHECK(a.to_json() == gromov_delta(g, s).to_json());
}

TEST_CASE("mode selection and limits") {
  const SparseGraph big = generate_path(301).graph;
  CHECK_THROWS_AS(gromov_delta(big, exact()), GraphError);
  DeltaOptions a;
  a.samples = 1000;
  CHECK(gromov_delta(big, a).mode == DeltaMode::Sampled);
  CHECK(gromov_delta(generate_path(300).graph, a).mode == DeltaMode::Exact);
  CHECK(parse_delta_mode("sampled") == DeltaMode::Sampled);
  CHECK_THROWS_AS(parse_delta_mode("thin"), ConfigError);
}

TEST_CASE("small or split components give zero quadruples") {
  const auto tiny = gromov_delta(build_graph(3, {{0, 1}, {1, 2}}), exact());
  CHECK(tiny.quadruples_examined == 0);
  CHECK(tiny.max_delta == 0.0);
  CHECK(tiny.histogram.empty());

  // Two triangles plus an isolated pair: no component has four nodes.
  const auto split = gromov_delta(build_graph(8, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {6, 7}}),
                                  exact());
  CHECK(split.quadruples_examined == 0);

  // Two disjoint C4s: one quadruple per component.
  std::vector<Edge> two = cycle_edges(4);
  for (const auto& [u, v] : cycle_edges(4)) two.emplace_back(u + 4, v + 4);
  const auto rep = gromov_delta(build_graph(8, two), exact());
  CHECK(rep.quadruples_examined == 2);
  CHECK(rep.max_delta == 1.0);
}

TEST_CASE("report json") {
  const auto rep = gromov_delta(build_graph(4, cycle_edges(4)), exact());
  const auto j = rep.to_json();
  CHECK(j["mode"] == "exact");
  CHECK(j["max_delta"] == 1.0);
  CHECK(j["quadruples_examined"] == 1);
  CHECK(j["histogram"][0]["delta"] == 1.0);
  CHECK(j["histogram"][0]["count"] == 1);
}
