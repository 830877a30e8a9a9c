#include "hdg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace hdg {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw DataError("cannot open " + p.string());
  return is;
}

std::vector<Edge> read_edges(const fs::path& p) {
  std::ifstream is = open_input(p);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ss{std::string(t)};
    std::string a, b, extra;
    ss >> a >> b;
    NodeId u = 0, v = 0;
    if (!parse_number(a, u) || !parse_number(b, v) || (ss >> extra)) {
      throw ParseError(p.string(), lineno, "expected two node ids, got '" + std::string(t) + "'");
    }
    edges.emplace_back(u, v);
  }
  return edges;
}

Matrix read_features(const fs::path& p) {
  std::ifstream is = open_input(p);
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      const auto field = t.substr(start, comma == std::string_view::npos ? t.npos : comma - start);
      double v = 0.0;
      if (!parse_number(field, v) || !std::isfinite(v)) {
        throw ParseError(p.string(), lineno, "bad feature value '" + std::string(field) + "'");
      }
      data.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw ParseError(p.string(), lineno,
                       "expected " + std::to_string(cols) + " columns, got " + std::to_string(count));
    }
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

std::vector<int> read_labels(const fs::path& p) {
  std::ifstream is = open_input(p);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    int v = 0;
    if (!parse_number(t, v) || v < 0) {
      throw ParseError(p.string(), lineno, "bad class id '" + std::string(t) + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::size_t count_classes(std::span<const int> labels) {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

void normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double s = 0.0;
    for (double v : r) s += std::abs(v);
    if (s > 0.0)
      for (double& v : r) v /= s;
  }
}

std::vector<std::vector<std::size_t>> nodes_by_class(std::span<const int> labels,
                                                     std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> out(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

}  // namespace

void SplitMasks::validate(std::size_t num_nodes) const {
  std::vector<char> seen(num_nodes, 0);
  for (const auto* set : {&train, &val, &test}) {
    for (std::size_t i : *set) {
      if (i >= num_nodes) throw DataError("split index " + std::to_string(i) + " out of range");
      if (seen[i]) throw DataError("node " + std::to_string(i) + " appears in two splits");
      seen[i] = 1;
    }
  }
}

void DatasetBundle::validate() const {
  const std::size_t n = graph.num_nodes();
  if (features.rows() != n) {
    throw DataError(name + ": " + std::to_string(features.rows()) + " feature rows for " +
                    std::to_string(n) + " nodes");
  }
  if (labels.size() != n) {
    throw DataError(name + ": " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(n) + " nodes");
  }
  std::vector<char> present(num_classes, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
      throw DataError(name + ": class id " + std::to_string(l) + " out of range");
    present[static_cast<std::size_t>(l)] = 1;
  }
  if (std::find(present.begin(), present.end(), 0) != present.end())
    throw DataError(name + ": class ids are not contiguous from 0");
  splits.validate(n);
}

SplitMasks per_class_split(std::span<const int> labels, std::size_t num_classes,
                           std::size_t per_class, std::size_t val, std::size_t test,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SplitMasks s;
  std::vector<std::size_t> rest;
  for (auto& members : nodes_by_class(labels, num_classes)) {
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t k = std::min(per_class, members.size());
    s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
    rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
  }
  std::sort(rest.begin(), rest.end());
  std::shuffle(rest.begin(), rest.end(), rng);
  const std::size_t nv = std::min(val, rest.size());
  const std::size_t nt = std::min(test, rest.size() - nv);
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(nv));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(nv),
                rest.begin() + static_cast<std::ptrdiff_t>(nv + nt));
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

SplitMasks stratified_split(std::span<const int> labels, std::size_t num_classes,
                            double train_frac, double val_frac, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SplitMasks s;
  for (auto& members : nodes_by_class(labels, num_classes)) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto m = static_cast<double>(members.size());
    const auto nt = static_cast<std::size_t>(std::llround(train_frac * m));
    const auto nv = std::min(members.size() - nt, static_cast<std::size_t>(std::llround(val_frac * m)));
    auto it = members.begin();
    s.train.insert(s.train.end(), it, it + static_cast<std::ptrdiff_t>(nt));
    s.val.insert(s.val.end(), it + static_cast<std::ptrdiff_t>(nt),
                 it + static_cast<std::ptrdiff_t>(nt + nv));
    s.test.insert(s.test.end(), it + static_cast<std::ptrdiff_t>(nt + nv), members.end());
  }
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

DatasetBundle load_dataset(const fs::path& dir, const LoadOptions& opts) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  DatasetBundle d;
  d.name = dir.filename().string();
  if (d.name.empty()) d.name = dir.parent_path().filename().string();

  d.features = read_features(dir / "features.csv");
  d.labels = read_labels(dir / "labels.csv");
  const std::size_t n = d.features.rows();
  if (d.labels.size() != n) {
    throw DataError(d.name + ": labels.csv has " + std::to_string(d.labels.size()) +
                    " rows, features.csv has " + std::to_string(n));
  }
  const auto edges = read_edges(dir / "edges.txt");
  d.graph = build_graph(n, edges);
  d.num_classes = count_classes(d.labels);

  if (fs::exists(dir / "meta.json")) {
    std::ifstream is = open_input(dir / "meta.json");
    nlohmann::json meta;
    try {
      is >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("meta.json: " + std::string(e.what()));
    }
    auto check = [&](const char* key, std::size_t actual) {
      if (meta.contains(key) && meta[key].get<std::size_t>() != actual) {
        throw DataError(d.name + ": meta.json declares " + key + " = " + meta[key].dump() +
                        ", found " + std::to_string(actual));
      }
    };
    check("num_nodes", n);
    check("num_features", d.features.cols());
    check("num_classes", d.num_classes);
  }

  if (fs::exists(dir / "splits.json")) {
    std::ifstream is = open_input(dir / "splits.json");
    try {
      nlohmann::json j;
      is >> j;
      d.splits.train = j.at("train").get<std::vector<std::size_t>>();
      d.splits.val = j.at("val").get<std::vector<std::size_t>>();
      d.splits.test = j.at("test").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("splits.json: " + std::string(e.what()));
    }
  } else if (n >= 20 * d.num_classes + 1500) {
    d.splits = per_class_split(d.labels, d.num_classes, 20, 500, 1000, opts.split_seed);
  } else {
    d.splits = stratified_split(d.labels, d.num_classes, 0.6, 0.2, opts.split_seed);
  }

  if (opts.normalize_features) normalize_rows(d.features);
  d.validate();
  return d;
}

void save_dataset(const DatasetBundle& data, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* file) {
    std::ofstream os(dir / file);
    if (!os) throw DataError("cannot write " + (dir / file).string());
    return os;
  };
  {
    auto os = open("edges.txt");
    for (const auto& [u, v] : data.graph.edges()) os << u << ' ' << v << '\n';
  }
  {
    auto os = open("features.csv");
    for (std::size_t i = 0; i < data.features.rows(); ++i) {
      const auto r = data.features.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << format_double(r[j]);
      os << '\n';
    }
  }
  {
    auto os = open("labels.csv");
    for (int l : data.labels) os << l << '\n';
  }
  {
    nlohmann::json j{{"train", data.splits.train}, {"val", data.splits.val}, {"test", data.splits.test}};
    open("splits.json") << j.dump() << '\n';
  }
  {
    nlohmann::json j{{"num_nodes", data.num_nodes()},
                     {"num_features", data.features.cols()},
                     {"num_classes", data.num_classes}};
    open("meta.json") << j.dump() << '\n';
  }
}

TreeLabelRule parse_tree_label_rule(const std::string& name) {
  if (name == "subtree") return TreeLabelRule::TopLevelSubtree;
  if (name == "parity") return TreeLabelRule::DepthParity;
  if (name == "attribute") return TreeLabelRule::NodeAttribute;
  throw ConfigError("unknown tree label rule '" + name + "' (expected subtree, parity, attribute)");
}

DatasetBundle generate_tree(const TreeSpec& spec) {
  if (spec.depth < 1) throw ConfigError("generate_tree: depth must be >= 1");
  if (spec.branching < 1) throw ConfigError("generate_tree: branching must be >= 1");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_std);

  // Breadth-first numbering: children of node k are contiguous.
  std::vector<std::size_t> depth{0};
  std::vector<std::size_t> top{0};
  std::vector<Edge> edges;
  std::size_t level_begin = 0, level_end = 1;
  for (std::size_t d = 1; d <= spec.depth; ++d) {
    for (std::size_t parent = level_begin; parent < level_end; ++parent) {
      for (std::size_t c = 0; c < spec.branching; ++c) {
        const std::size_t child = depth.size();
        depth.push_back(d);
        top.push_back(d == 1 ? c : top[parent]);
        edges.emplace_back(static_cast<NodeId>(parent), static_cast<NodeId>(child));
      }
    }
    level_begin = level_end;
    level_end = depth.size();
  }
  const std::size_t n = depth.size();

  DatasetBundle d;
  d.name = "tree-d" + std::to_string(spec.depth) + "-b" + std::to_string(spec.branching);
  d.graph = build_graph(n, edges);
  d.labels.resize(n);
  switch (spec.rule) {
    case TreeLabelRule::TopLevelSubtree:
      d.num_classes = spec.branching;
      for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<int>(top[i]);
      break;
    case TreeLabelRule::DepthParity:
      d.num_classes = 2;
      for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<int>(depth[i] % 2);
      break;
    case TreeLabelRule::NodeAttribute: {
      d.num_classes = std::max<std::size_t>(2, spec.branching);
      std::uniform_int_distribution<int> cls(0, static_cast<int>(d.num_classes) - 1);
      for (std::size_t i = 0; i < n; ++i) d.labels[i] = cls(rng);
      break;
    }
  }
  const bool class_block = spec.rule != TreeLabelRule::DepthParity;
  const std::size_t width = spec.depth + 1 + (class_block ? d.num_classes : 0);
  d.features = Matrix(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    d.features(i, depth[i]) = 1.0;
    if (class_block) d.features(i, spec.depth + 1 + static_cast<std::size_t>(d.labels[i])) = 1.0;
    for (double& v : d.features.row(i)) v += noise(rng);
  }
  d.splits = stratified_split(d.labels, d.num_classes, 0.6, 0.2, spec.seed + 1);
  d.validate();
  return d;
}

DatasetBundle generate_grid(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < 2 || cols < 2) throw ConfigError("generate_grid: need at least 2x2");
  const std::size_t n = rows * cols;
  std::vector<Edge> edges;
  DatasetBundle d;
  d.name = "grid-" + std::to_string(rows) + "x" + std::to_string(cols);
  d.features = Matrix(n, 2);
  d.labels.resize(n);
  d.num_classes = 4;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto id = static_cast<NodeId>(r * cols + c);
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, static_cast<NodeId>(id + cols));
      d.features(id, 0) = static_cast<double>(c) / static_cast<double>(cols - 1);
      d.features(id, 1) = static_cast<double>(r) / static_cast<double>(rows - 1);
      d.labels[id] = static_cast<int>((2 * r >= rows ? 2 : 0) + (2 * c >= cols ? 1 : 0));
    }
  }
  d.graph = build_graph(n, edges);
  d.splits = stratified_split(d.labels, d.num_classes, 0.6, 0.2, seed);
  d.validate();
  return d;
}

namespace {

DatasetBundle trivial_bundle(std::string name, std::size_t n, const std::vector<Edge>& edges) {
  DatasetBundle d;
  d.name = std::move(name);
  d.graph = build_graph(n, edges);
  d.features = Matrix(n, 1, 1.0);
  d.labels.assign(n, 0);
  d.num_classes = n ? 1 : 0;
  d.splits = stratified_split(d.labels, d.num_classes, 0.6, 0.2, 0);
  return d;
}

}  // namespace

DatasetBundle generate_path(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return trivial_bundle("path-" + std::to_string(n), n, edges);
}

DatasetBundle generate_cycle(std::size_t n) {
  if (n < 3) throw ConfigError("generate_cycle: need at least 3 nodes");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return trivial_bundle("cycle-" + std::to_string(n), n, edges);
}

bool is_generator_spec(const std::string& text) {
  for (const char* prefix : {"tree:", "grid:", "path:", "cycle:"})
    if (text.rfind(prefix, 0) == 0) return true;
  return false;
}

DatasetBundle generate_from_spec(const std::string& spec, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(spec);
  while (std::getline(ss, part, ':')) parts.push_back(part);
  auto number = [&](std::size_t i) {
    std::size_t v = 0;
    if (i >= parts.size() || !parse_number(parts[i], v))
      throw ConfigError("bad generator spec '" + spec + "'");
    return v;
  };
  if (parts.empty()) throw ConfigError("empty generator spec");
  const std::string& kind = parts[0];
  if (kind == "tree") {
    TreeSpec t;
    t.depth = number(1);
    t.branching = number(2);
    if (parts.size() > 3) t.rule = parse_tree_label_rule(parts[3]);
    if (parts.size() > 4 && !parse_number(parts[4], t.noise_std))
      throw ConfigError("bad noise level in '" + spec + "'");
    if (parts.size() > 5) throw ConfigError("bad generator spec '" + spec + "'");
    t.seed = seed;
    return generate_tree(t);
  }
  if (kind == "grid" && parts.size() == 3) return generate_grid(number(1), number(2), seed);
  if (kind == "path" && parts.size() == 2) return generate_path(number(1));
  if (kind == "cycle" && parts.size() == 2) return generate_cycle(number(1));
  throw ConfigError("bad generator spec '" + spec + "'");
}

DatasetBundle mix_datasets(const DatasetBundle& a, const DatasetBundle& b, const MixOptions& opts) {
  const std::size_t na = a.num_nodes();
  const std::size_t nb = b.num_nodes();
  const std::size_t wa = a.features.cols();
  const std::size_t wb = b.features.cols();
  const std::size_t width = opts.disjoint_columns ? wa + wb : std::max(wa, wb);
  const std::size_t b_col = opts.disjoint_columns ? wa : 0;

  DatasetBundle d;
  d.name = a.name + "+" + b.name;
  std::vector<Edge> edges(a.graph.edges());
  for (const auto& [u, v] : b.graph.edges())
    edges.emplace_back(static_cast<NodeId>(u + na), static_cast<NodeId>(v + na));
  d.graph = build_graph(na + nb, edges);

  d.features = Matrix(na + nb, width);
  for (std::size_t i = 0; i < na; ++i)
    std::copy(a.features.row(i).begin(), a.features.row(i).end(), d.features.row(i).begin());
  for (std::size_t i = 0; i < nb; ++i)
    std::copy(b.features.row(i).begin(), b.features.row(i).end(),
              d.features.row(na + i).begin() + static_cast<std::ptrdiff_t>(b_col));

  d.labels = a.labels;
  for (int l : b.labels) d.labels.push_back(l + static_cast<int>(a.num_classes));
  d.num_classes = a.num_classes + b.num_classes;
  d.splits = stratified_split(d.labels, d.num_classes, 0.6, 0.2, opts.seed);
  d.validate();
  return d;
}

}  // namespace hdg
