#include "hdg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hdg/errors.hpp"

namespace fs = std::filesystem;

namespace hdg {

namespace {

struct PresetRow {
  const char* name;
  const char* dataset;
  const char* task;
  const char* lr;
  const char* decay;
  const char* dropout;
  const char* time;
  const char* step;
};

constexpr PresetRow kTablePresets[] = {
    {"disease-nc", "data/disease_nc", "nc", "0.005", "0.0001", "0.4", "1.0", "1.0"},
    {"disease-lp", "data/disease_lp", "lp", "0.005", "0.01", "0.4", "1.0", "0.5"},
    {"airport-nc", "data/airport", "nc", "0.005", "0.001", "0.8", "2.0", "0.5"},
    {"airport-lp", "data/airport", "lp", "0.005", "0.0001", "0.0", "1.0", "1.0"},
    {"pubmed-nc", "data/pubmed", "nc", "0.005", "0.01", "0.2", "8.0", "1.0"},
    {"pubmed-lp", "data/pubmed", "lp", "0.005", "0.0001", "0.0", "1.0", "0.5"},
    {"citeseer-nc", "data/citeseer", "nc", "0.01", "0.001", "0.2", "1.0", "0.5"},
    {"citeseer-lp", "data/citeseer", "lp", "0.001", "0.0001", "0.0", "10.0", "1.0"},
    {"cora-nc", "data/cora", "nc", "0.005", "0.1", "0.6", "10.0", "1.0"},
    {"cora-lp", "data/cora", "lp", "0.005", "0.0001", "0.4", "1.0", "1.0"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_uint(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

// Files go to a hidden staging directory and are renamed into place only on
// commit, so a failed command leaves nothing behind.
class OutputStage {
 public:
  explicit OutputStage(fs::path out) : out_(std::move(out)), stage_(out_ / ".hdg-staging") {
    fs::create_directories(out_);
    fs::remove_all(stage_);
    fs::create_directories(stage_);
  }
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;
  ~OutputStage() {
    std::error_code ec;
    fs::remove_all(stage_, ec);
  }

  fs::path path(const std::string& name) {
    names_.push_back(name);
    return stage_ / name;
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream os(path(name), std::ios::binary);
    os << content;
    if (!os) throw DataError("cannot write " + (out_ / name).string());
  }

  void commit() {
    for (const auto& n : names_) {
      if (fs::is_directory(out_ / n)) fs::remove_all(out_ / n);
      fs::rename(stage_ / n, out_ / n);
    }
  }

 private:
  fs::path out_;
  fs::path stage_;
  std::vector<std::string> names_;
};

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

ModelConfig fitted_model(const ExperimentConfig& cfg, const DatasetBundle& data) {
  ModelConfig m = cfg.model;
  m.input_dim = data.features.cols();
  m.num_classes = std::max<std::size_t>(data.num_classes, 1);
  m.validate();
  return m;
}

TrainConfig run_train_config(const ExperimentConfig& cfg, std::size_t run) {
  TrainConfig t = cfg.train;
  t.seed = cfg.train.seed + run;
  t.record_wall_time = cfg.timing;
  return t;
}

struct RunOutcome {
  TrainResult result;
  LinkSplit split;  // link prediction only
};

RunOutcome train_once(const DatasetBundle& data, const ModelConfig& model, const TrainConfig& tc,
                      Task task, std::uint64_t data_seed) {
  RunOutcome o;
  if (task == Task::NodeClassification) {
    o.result = train_node_classifier(data, model, tc);
  } else {
    o.split = split_edges(data.graph, tc.lp_val_frac, tc.lp_test_frac, data_seed);
    o.result = train_link_predictor(data, o.split, model, tc);
  }
  return o;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

std::string task_name(Task t) { return t == Task::NodeClassification ? "nc" : "lp"; }

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kTablePresets) out.emplace_back(p.name);
  out.emplace_back("tree-synthetic");
  std::sort(out.begin(), out.end());
  return out;
}

ConfigMap preset_values(const std::string& name) {
  for (const auto& p : kTablePresets) {
    if (name != p.name) continue;
    return {{"task", p.task},
            {"dataset", p.dataset},
            {"lr", p.lr},
            {"weight_decay", p.decay},
            {"dropout", p.dropout},
            {"time", p.time},
            {"step_size", p.step},
            {"solver", "euler"},
            {"flow", "hamiltonian"},
            {"energy", "learned"},
            {"hidden_dim", "16"},
            {"epochs", "1000"},
            {"patience", "100"}};
  }
  if (name == "tree-synthetic") {
    return {{"task", "nc"},
            {"dataset", "tree:7:2:attribute"},
            {"lr", "0.01"},
            {"weight_decay", "0.0005"},
            {"dropout", "0.0"},
            {"time", "2.0"},
            {"step_size", "1.0"},
            {"solver", "euler"},
            {"flow", "hamiltonian"},
            {"energy", "learned"},
            {"hidden_dim", "8"},
            {"epochs", "300"},
            {"patience", "100"},
            {"layers", "2,8,32,64"}};
  }
  throw ConfigError("unknown preset '" + name + "'");
}

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
  ConfigMap out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (out.contains(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

ConfigMap read_config_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

ConfigMap resolve_presets(const ConfigMap& raw) {
  const auto it = raw.find("preset");
  if (it == raw.end()) return raw;
  ConfigMap out = preset_values(it->second);
  for (const auto& [k, v] : raw) out[k] = v;
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset is not set");
  model.solver.validate();
  train.validate();
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (model.hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  if (runs == 0) throw ConfigError("runs must be positive");
  for (std::size_t l : layers)
    if (l == 0) throw ConfigError("layers must be positive integers");
  if (perturb_mode != "feature_noise" && perturb_mode != "edge_add")
    throw ConfigError("perturb_mode must be feature_noise or edge_add");
  if (!(magnitude >= 0.0)) throw ConfigError("magnitude must be >= 0");
  if (perturb_mode == "edge_add" && magnitude != std::floor(magnitude))
    throw ConfigError("edge_add magnitude is an edge count and must be an integer");
}

ExperimentConfig make_experiment_config(const ConfigMap& values) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"preset", [&](auto&, auto& v) { c.preset = v; }},
      {"task",
       [&](auto& k, auto& v) {
         if (v == "nc") c.task = Task::NodeClassification;
         else if (v == "lp") c.task = Task::LinkPrediction;
         else throw ConfigError(k + ": expected nc or lp, got '" + v + "'");
       }},
      {"dataset", [&](auto&, auto& v) { c.dataset = v; }},
      {"data_seed", [&](auto& k, auto& v) { c.data_seed = to_uint(k, v); }},
      {"normalize_features", [&](auto& k, auto& v) { c.normalize_features = to_bool(k, v); }},
      {"flow", [&](auto&, auto& v) { c.model.flow = parse_flow_kind(v); }},
      {"energy", [&](auto&, auto& v) { c.model.energy = parse_energy_kind(v); }},
      {"solver", [&](auto&, auto& v) { c.model.solver.method = parse_solver_method(v); }},
      {"time", [&](auto& k, auto& v) { c.model.solver.time = to_double(k, v); }},
      {"step_size", [&](auto& k, auto& v) { c.model.solver.step_size = to_double(k, v); }},
      {"rtol", [&](auto& k, auto& v) { c.model.solver.rtol = to_double(k, v); }},
      {"atol", [&](auto& k, auto& v) { c.model.solver.atol = to_double(k, v); }},
      {"max_steps", [&](auto& k, auto& v) { c.model.solver.max_steps = to_uint(k, v); }},
      {"hidden_dim", [&](auto& k, auto& v) { c.model.hidden_dim = to_uint(k, v); }},
      {"energy_hidden", [&](auto& k, auto& v) { c.model.energy_hidden = to_uint(k, v); }},
      {"energy_out", [&](auto& k, auto& v) { c.model.energy_out = to_uint(k, v); }},
      {"dropout", [&](auto& k, auto& v) { c.model.dropout = to_double(k, v); }},
      {"energy_eps", [&](auto& k, auto& v) { c.model.energy_eps = to_double(k, v); }},
      {"fermi_r", [&](auto& k, auto& v) { c.model.fermi_r = to_double(k, v); }},
      {"fermi_t", [&](auto& k, auto& v) { c.model.fermi_t = to_double(k, v); }},
      {"lr", [&](auto& k, auto& v) { c.train.lr = to_double(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { c.train.weight_decay = to_double(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.train.epochs = to_uint(k, v); }},
      {"patience", [&](auto& k, auto& v) { c.train.patience = to_uint(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.train.seed = to_uint(k, v); }},
      {"lp_val_frac", [&](auto& k, auto& v) { c.train.lp_val_frac = to_double(k, v); }},
      {"lp_test_frac", [&](auto& k, auto& v) { c.train.lp_test_frac = to_double(k, v); }},
      {"runs", [&](auto& k, auto& v) { c.runs = to_uint(k, v); }},
      {"layers", [&](auto& k, auto& v) { c.layers = to_list(k, v); }},
      {"perturb_mode", [&](auto&, auto& v) { c.perturb_mode = v; }},
      {"magnitude", [&](auto& k, auto& v) { c.magnitude = to_double(k, v); }},
      {"delta_mode", [&](auto&, auto& v) { c.delta.mode = parse_delta_mode(v); }},
      {"delta_samples", [&](auto& k, auto& v) { c.delta.samples = to_uint(k, v); }},
      {"delta_landmarks", [&](auto& k, auto& v) { c.delta.landmarks = to_uint(k, v); }},
      {"checkpoint", [&](auto&, auto& v) { c.checkpoint = v; }},
      {"timing", [&](auto& k, auto& v) { c.timing = to_bool(k, v); }},
  };
  for (const auto& [k, v] : values) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second(k, v);
  }
  c.delta.seed = c.train.seed;
  c.validate();
  return c;
}

DatasetBundle resolve_dataset(const std::string& dataset, std::uint64_t data_seed,
                              bool normalize_features) {
  if (is_generator_spec(dataset)) return generate_from_spec(dataset, data_seed);
  LoadOptions opts;
  opts.normalize_features = normalize_features;
  opts.split_seed = data_seed;
  return load_dataset(dataset, opts);
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  const DatasetBundle data = resolve_dataset(cfg.dataset, cfg.data_seed, cfg.normalize_features);
  const ModelConfig model = fitted_model(cfg, data);

  std::vector<RunOutcome> runs;
  std::vector<double> metrics;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    runs.push_back(train_once(data, model, run_train_config(cfg, r), cfg.task, cfg.data_seed));
    metrics.push_back(runs.back().result.test_metric);
  }
  const auto [mean, std_dev] = mean_std(metrics);
  const RunOutcome& first = runs.front();
  const SparseGraph& graph =
      cfg.task == Task::LinkPrediction ? first.split.train_graph : data.graph;
  const Matrix z = embed(data.features, graph, first.result.params, model);

  nlohmann::json per_run = nlohmann::json::array();
  double wall = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& res = runs[r].result;
    wall += res.wall_ms;
    per_run.push_back({{"seed", cfg.train.seed + r},
                       {"test_metric", res.test_metric},
                       {"best_val", res.best_val},
                       {"best_epoch", res.best_epoch},
                       {"epochs_run", res.log.size()},
                       {"wall_ms", res.wall_ms}});
  }
  const nlohmann::json metrics_json{
      {"schema_version", 1},
      {"command", "train"},
      {"preset", cfg.preset},
      {"task", task_name(cfg.task)},
      {"dataset", data.name},
      {"metric", cfg.task == Task::NodeClassification ? "accuracy" : "roc_auc"},
      {"test_metric", mean},
      {"test_metric_std", std_dev},
      {"best_epoch", first.result.best_epoch},
      {"wall_ms", wall},
      {"runs", per_run}};

  std::ostringstream log;
  for (const auto& rec : first.result.log) log << rec.to_json().dump() << '\n';

  OutputStage stage(out);
  stage.write("metrics.json", json_text(metrics_json));
  stage.write("log.jsonl", log.str());
  save_checkpoint(stage.path("checkpoint.json").string(), model, first.result.params);
  write_embeddings_csv(stage.path("embeddings.csv").string(), z);
  stage.commit();
}

void cmd_sweep_layers(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  if (cfg.task != Task::NodeClassification) throw ConfigError("sweep-layers needs task = nc");
  const DatasetBundle data = resolve_dataset(cfg.dataset, cfg.data_seed, cfg.normalize_features);

  std::ostringstream csv;
  csv.precision(17);
  csv << "flow,layers,accuracy_mean,accuracy_std,runs\n";
  nlohmann::json rows = nlohmann::json::array();
  for (FlowKind flow : {FlowKind::Hamiltonian, FlowKind::LinearDiffusion}) {
    for (std::size_t layers : cfg.layers) {
      ExperimentConfig c = cfg;
      c.model.flow = flow;
      c.model.solver.method = SolverMethod::Euler;
      c.model.solver.step_size = 1.0;
      c.model.solver.time = static_cast<double>(layers);
      const ModelConfig model = fitted_model(c, data);
      std::vector<double> acc;
      for (std::size_t r = 0; r < cfg.runs; ++r)
        acc.push_back(train_node_classifier(data, model, run_train_config(c, r)).test_metric);
      const auto [mean, std_dev] = mean_std(acc);
      csv << to_string(flow) << ',' << layers << ',' << mean << ',' << std_dev << ',' << cfg.runs
          << '\n';
      rows.push_back({{"flow", to_string(flow)}, {"layers", layers}, {"accuracy", acc}});
    }
  }
  OutputStage stage(out);
  stage.write("sweep.csv", csv.str());
  stage.write("sweep.json", json_text({{"schema_version", 1},
                                        {"command", "sweep-layers"},
                                        {"dataset", data.name},
                                        {"rows", rows}}));
  stage.commit();
}

void cmd_energy_trace(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  if (cfg.model.flow != FlowKind::Hamiltonian)
    throw ConfigError("energy-trace needs flow = hamiltonian");
  const DatasetBundle data = resolve_dataset(cfg.dataset, cfg.data_seed, cfg.normalize_features);
  const ModelConfig model = fitted_model(cfg, data);
  const ModelParams params = cfg.checkpoint.empty() ? initialize_params(model, cfg.train.seed)
                                                    : load_checkpoint(cfg.checkpoint, model);
  const BoundParams bound = bind(params, model, nullptr);
  const EmbedResult res =
      embed(DiffTensor(data.features), data.graph, bound, model, false, 0, true);

  std::ostringstream csv;
  write_energy_csv(csv, *res.trajectory);
  const auto& e = res.trajectory->energies;
  const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
  const double e0 = e.front();
  OutputStage stage(out);
  stage.write("energy.csv", csv.str());
  stage.write("energy.json",
              json_text({{"schema_version", 1},
                         {"command", "energy-trace"},
                         {"solver", to_string(model.solver.method)},
                         {"rows", e.size()},
                         {"initial_energy", e0},
                         {"relative_spread", e0 != 0.0 ? (*hi - *lo) / std::abs(e0) : *hi - *lo},
                         {"accepted_steps", res.stats.accepted_steps},
                         {"rejected_steps", res.stats.rejected_steps}}));
  stage.commit();
}

Matrix add_feature_noise(const Matrix& features, std::span<const std::size_t> rows, double std_dev,
                         std::uint64_t seed) {
  if (!(std_dev >= 0.0)) throw ConfigError("noise std must be >= 0");
  Matrix out = features;
  if (std_dev == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std_dev);
  for (std::size_t r : rows)
    for (double& v : out.row(r)) v += noise(rng);
  return out;
}

SparseGraph add_random_edges(const SparseGraph& graph, std::size_t count, std::uint64_t seed) {
  const std::size_t n = graph.num_nodes();
  const std::size_t pairs = n < 2 ? 0 : n * (n - 1) / 2;
  if (graph.num_edges() >= pairs) throw GraphError("edge_add: graph is complete, no edge to insert");
  if (count == 0) return graph;
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges(graph.edges().begin(), graph.edges().end());
  const auto extra = negative_sample(graph, count, rng);
  edges.insert(edges.end(), extra.begin(), extra.end());
  return build_graph(n, edges);
}

PerturbOutcome perturb_eval(const DatasetBundle& data, const ModelParams& params,
                            const ModelConfig& model, const std::string& mode, double magnitude,
                            std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw ConfigError("magnitude must be >= 0");
  PerturbOutcome o;
  o.clean = evaluate_nc(data, params, model, data.splits.test);
  DatasetBundle noisy = data;
  if (mode == "feature_noise") {
    noisy.features = add_feature_noise(data.features, data.splits.test, magnitude, seed);
  } else if (mode == "edge_add") {
    noisy.graph = add_random_edges(data.graph, static_cast<std::size_t>(magnitude), seed);
  } else {
    throw ConfigError("unknown perturbation '" + mode + "'");
  }
  o.perturbed = evaluate_nc(noisy, params, model, noisy.splits.test);
  return o;
}

void cmd_perturb(const ExperimentConfig& cfg, const fs::path& out) {
  cfg.validate();
  if (cfg.task != Task::NodeClassification) throw ConfigError("perturb needs task = nc");
  const DatasetBundle data = resolve_dataset(cfg.dataset, cfg.data_seed, cfg.normalize_features);
  if (cfg.perturb_mode == "edge_add") {
    const std::size_t n = data.num_nodes();
    if (data.graph.num_edges() >= (n < 2 ? 0 : n * (n - 1) / 2))
      throw GraphError("edge_add: graph is complete, no edge to insert");
  }
  const ModelConfig model = fitted_model(cfg, data);

  std::vector<double> clean, perturbed;
  nlohmann::json per_run = nlohmann::json::array();
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const TrainConfig tc = run_train_config(cfg, r);
    const TrainResult res = train_node_classifier(data, model, tc);
    const PerturbOutcome o =
        perturb_eval(data, res.params, model, cfg.perturb_mode, cfg.magnitude, tc.seed + 7919);
    clean.push_back(o.clean);
    perturbed.push_back(o.perturbed);
    per_run.push_back({{"seed", tc.seed}, {"clean", o.clean}, {"perturbed", o.perturbed}});
  }
  const auto [cm, cs] = mean_std(clean);
  const auto [pm, ps] = mean_std(perturbed);
  OutputStage stage(out);
  stage.write("perturb.json", json_text({{"schema_version", 1},
                                          {"command", "perturb"},
                                          {"dataset", data.name},
                                          {"mode", cfg.perturb_mode},
                                          {"magnitude", cfg.magnitude},
                                          {"clean_accuracy", cm},
                                          {"clean_accuracy_std", cs},
                                          {"perturbed_accuracy", pm},
                                          {"perturbed_accuracy_std", ps},
                                          {"drop", cm - pm},
                                          {"runs", per_run}}));
  stage.commit();
}

void cmd_hyperbolicity(const ExperimentConfig& cfg, const fs::path& out) {
  if (cfg.dataset.empty()) throw ConfigError("dataset is not set");
  const DatasetBundle data = resolve_dataset(cfg.dataset, cfg.data_seed, false);
  nlohmann::json j = gromov_delta(data.graph, cfg.delta).to_json();
  j["dataset"] = data.name;
  j["num_nodes"] = data.num_nodes();
  OutputStage stage(out);
  stage.write("hyperbolicity.json", json_text(j));
  stage.commit();
}

void cmd_mix(const std::string& a, const std::string& b, const MixOptions& opts,
             const fs::path& out) {
  const DatasetBundle da = resolve_dataset(a, opts.seed, false);
  const DatasetBundle db = resolve_dataset(b, opts.seed, false);
  const DatasetBundle mixed = mix_datasets(da, db, opts);
  OutputStage stage(out);
  save_dataset(mixed, stage.path("dataset"));
  stage.write("mix.json", json_text({{"schema_version", 1},
                                      {"command", "mix"},
                                      {"a", da.name},
                                      {"b", db.name},
                                      {"num_nodes", mixed.num_nodes()},
                                      {"num_edges", mixed.graph.num_edges()},
                                      {"num_features", mixed.features.cols()},
                                      {"num_classes", mixed.num_classes}}));
  stage.commit();
}

}  // namespace hdg
