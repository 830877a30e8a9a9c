#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdg/graph.hpp"
#include "hdg/matrix.hpp"

namespace hdg {

/// Disjoint node-index sets.
struct SplitMasks {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  /// Throws DataError on out-of-range indices or overlap.
  void validate(std::size_t num_nodes) const;
};

struct DatasetBundle {
  std::string name;
  SparseGraph graph;
  Matrix features;  // raw, node-major
  std::vector<int> labels;
  std::size_t num_classes = 0;
  SplitMasks splits;

  std::size_t num_nodes() const { return graph.num_nodes(); }
  /// Label count, contiguous class ids, feature rows, split bounds.
  void validate() const;
};

struct LoadOptions {
  bool normalize_features = true;  // divide each row by its L1 norm
  std::uint64_t split_seed = 0;    // used only when splits.json is absent
};

/// Reads a dataset directory:
///   edges.txt     "u v" per line
///   features.csv  one comma-separated row per node
///   labels.csv    one integer class id per line
///   splits.json   optional {"train":[...],"val":[...],"test":[...]}
///   meta.json     optional {"num_nodes", "num_features", "num_classes"} checked on load
/// Without splits.json a split is drawn: 20 per class / 500 / 1000 when the
/// graph is large enough, else a stratified 60/20/20 split.
DatasetBundle load_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {});

/// Writes every file load_dataset reads (including splits.json and meta.json).
/// Doubles are written in shortest round-trip form.
void save_dataset(const DatasetBundle& data, const std::filesystem::path& dir);

/// `per_class` training nodes per class, then `val` and `test` nodes from the rest.
SplitMasks per_class_split(std::span<const int> labels, std::size_t num_classes,
                           std::size_t per_class, std::size_t val, std::size_t test,
                           std::uint64_t seed);

/// Stratified random split; each class is shuffled and cut by the fractions.
SplitMasks stratified_split(std::span<const int> labels, std::size_t num_classes,
                            double train_frac, double val_frac, std::uint64_t seed);

/// Label rule for balanced-tree datasets.
///  - TopLevelSubtree: class = index of the root child the node descends from
///    (root is class 0); a noisy one-hot class block is appended to features.
///  - DepthParity: class = depth mod 2; no extra feature block.
///  - NodeAttribute: class drawn uniformly per node; a noisy one-hot class block
///    is appended. Labels are unrelated to position, so heavy smoothing erases them.
enum class TreeLabelRule { TopLevelSubtree, DepthParity, NodeAttribute };

TreeLabelRule parse_tree_label_rule(const std::string& name);

struct TreeSpec {
  std::size_t depth = 7;
  std::size_t branching = 2;
  TreeLabelRule rule = TreeLabelRule::NodeAttribute;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

/// Balanced tree in breadth-first numbering. Features: one-hot depth plus
/// Gaussian noise (and the rule's class block). Stratified 60/20/20 split.
DatasetBundle generate_tree(const TreeSpec& spec);

/// rows × cols 4-neighbour lattice; features are (x, y) in [0, 1]; labels by quadrant.
DatasetBundle generate_grid(std::size_t rows, std::size_t cols, std::uint64_t seed = 0);

/// Path P_n and cycle C_n with constant features and one class.
DatasetBundle generate_path(std::size_t n);
DatasetBundle generate_cycle(std::size_t n);

/// Parses "tree:<depth>:<branching>[:<rule>[:<noise>]]", "grid:<rows>:<cols>",
/// "path:<n>" or "cycle:<n>". Throws ConfigError on anything else.
DatasetBundle generate_from_spec(const std::string& spec, std::uint64_t seed);
bool is_generator_spec(const std::string& text);

struct MixOptions {
  bool disjoint_columns = false;  // default: both feature blocks start at column 0
  std::uint64_t seed = 0;
};

/// Block-diagonal union: b's nodes follow a's, no cross edges, features
/// zero-padded, b's class ids shifted by a.num_classes, fresh stratified
/// 60/20/20 split.
DatasetBundle mix_datasets(const DatasetBundle& a, const DatasetBundle& b,
                           const MixOptions& opts = {});

}  // namespace hdg
