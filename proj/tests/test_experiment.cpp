#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hdg/errors.hpp"
#include "hdg/experiment.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace hdg;
using namespace hdg::testing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hdg_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig quick(const std::string& dataset = "tree:3:2:subtree") {
  return make_experiment_config({{"dataset", dataset},
                                 {"epochs", "10"},
                                 {"runs", "2"},
                                 {"hidden_dim", "4"},
                                 {"time", "2"},
                                 {"timing", "false"}});
}

}  // namespace

TEST_CASE("config text parsing") {
  const ConfigMap m = parse_config_text("# comment\n lr = 0.01 \n\nflow=vanilla # trailing\n");
  CHECK(m == ConfigMap{{"lr", "0.01"}, {"flow", "vanilla"}});
  try {
    parse_config_text("lr = 1\nnonsense\n", "exp.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("exp.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("lr = 1\nlr = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(" = 2\n"), ConfigError);
  CHECK_THROWS_AS(read_config_file("/nonexistent/exp.cfg"), ConfigError);
}

TEST_CASE("presets carry the per-dataset hyper-parameters") {
  struct Row {
    const char* name;
    const char* lr;
    const char* decay;
    const char* dropout;
    const char* time;
    const char* step;
  };
  const Row rows[] = {
      {"disease-nc", "0.005", "0.0001", "0.4", "1.0", "1.0"},
      {"disease-lp", "0.005", "0.01", "0.4", "1.0", "0.5"},
      {"airport-nc", "0.005", "0.001", "0.8", "2.0", "0.5"},
      {"airport-lp", "0.005", "0.0001", "0.0", "1.0", "1.0"},
      {"pubmed-nc", "0.005", "0.01", "0.2", "8.0", "1.0"},
      {"pubmed-lp", "0.005", "0.0001", "0.0", "1.0", "0.5"},
      {"citeseer-nc", "0.01", "0.001", "0.2", "1.0", "0.5"},
      {"citeseer-lp", "0.001", "0.0001", "0.0", "10.0", "1.0"},
      {"cora-nc", "0.005", "0.1", "0.6", "10.0", "1.0"},
      {"cora-lp", "0.005", "0.0001", "0.4", "1.0", "1.0"},
  };
  for (const Row& r : rows) {
    CAPTURE(r.name);
    const ExperimentConfig c = make_experiment_config(resolve_presets({{"preset", r.name}}));
    CHECK(c.train.lr == std::stod(r.lr));
    CHECK(c.train.weight_decay == std::stod(r.decay));
    CHECK(c.model.dropout == std::stod(r.dropout));
    CHECK(c.model.solver.time == std::stod(r.time));
    CHECK(c.model.solver.step_size == std::stod(r.step));
    CHECK(c.task == (std::string(r.name).ends_with("-lp") ? Task::LinkPrediction
                                                          : Task::NodeClassification));
    CHECK_NOTHROW(c.validate());
  }
  CHECK(preset_names().size() == 11);
  CHECK_THROWS_AS(preset_values("imagenet"), ConfigError);
}

TEST_CASE("explicit keys override the preset") {
  const ConfigMap m = resolve_presets({{"preset", "cora-nc"}, {"lr", "0.5"}, {"dataset", "tree:2:2"}});
  const ExperimentConfig c = make_experiment_config(m);
  CHECK(c.train.lr == 0.5);
  CHECK(c.dataset == "tree:2:2");
  CHECK(c.train.weight_decay == 0.1);
}

TEST_CASE("config values are checked") {
  CHECK_THROWS_AS(make_experiment_config({{"learning_rate", "0.1"}}), ConfigError);
  CHECK_THROWS_AS(make_experiment_config({{"lr", "fast"}}), ConfigError);
  CHECK_THROWS_AS(make_experiment_config({{"epochs", "-3"}}), ConfigError);
  CHECK_THROWS_AS(make_experiment_config({{"flow", "leapfrog"}}), ConfigError);
  CHECK_THROWS_AS(make_experiment_config({{"layers", "2,x"}}), ConfigError);
  ExperimentConfig c = make_experiment_config({{"dataset", "tree:2:2"}, {"layers", "2,4"}});
  CHECK(c.layers == std::vector<std::size_t>{2, 4});
  c.magnitude = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(make_experiment_config({}).validate(), ConfigError);
  CHECK_THROWS_AS(make_experiment_config({{"dataset", "tree:2:2"}, {"step_size", "0.3"}}), ConfigError);
}

TEST_CASE("perturbation helpers") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(6, 3, rng);
  const std::vector<std::size_t> rows{1, 4};
  CHECK(add_feature_noise(x, rows, 0.0, 3) == x);
  const Matrix noisy = add_feature_noise(x, rows, 0.1, 3);
  for (std::size_t u : {0u, 2u, 3u, 5u}) CHECK(noisy.row(u)[0] == x.row(u)[0]);
  CHECK(noisy(1, 0) != x(1, 0));
  CHECK(noisy == add_feature_noise(x, rows, 0.1, 3));
  CHECK_THROWS_AS(add_feature_noise(x, rows, -0.1, 3), ConfigError);

  const SparseGraph g = build_graph(5, {{0, 1}, {1, 2}});
  const SparseGraph more = add_random_edges(g, 3, 4);
  CHECK(more.num_edges() == 5);
  for (const auto& [u, v] : g.edges()) CHECK(more.has_edge(u, v));
  CHECK(add_random_edges(g, 0, 4).edges() == g.edges());
  const SparseGraph k3 = build_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK_THROWS_AS(add_random_edges(k3, 1, 0), GraphError);
}

TEST_CASE("perturb_eval at zero magnitude is a no-op") {
  const DatasetBundle d = resolve_dataset("tree:3:2:subtree", 0, true);
  ModelConfig m;
  m.input_dim = d.features.cols();
  m.num_classes = d.num_classes;
  m.hidden_dim = 4;
  const ModelParams p = initialize_params(m, 1);
  for (const char* mode : {"feature_noise", "edge_add"}) {
    const PerturbOutcome o = perturb_eval(d, p, m, mode, 0.0, 2);
    CHECK(o.clean == o.perturbed);
  }
  CHECK_THROWS_AS(perturb_eval(d, p, m, "feature_noise", -1.0, 2), ConfigError);
  CHECK_THROWS_AS(perturb_eval(d, p, m, "rewire", 1.0, 2), ConfigError);
}

TEST_CASE("train writes its outputs and reruns are identical") {
  const fs::path a = fresh_dir("train_a"), b = fresh_dir("train_b");
  cmd_train(quick(), a);
  cmd_train(quick(), b);
  for (const char* f : {"metrics.json", "log.jsonl", "checkpoint.json", "embeddings.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto metrics = nlohmann::json::parse(slurp(a / "metrics.json"));
  CHECK(metrics.contains("schema_version"));
  CHECK(metrics["test_metric"].get<double>() >= 0.0);
  CHECK(metrics["test_metric"].get<double>() <= 1.0);
  CHECK(metrics["wall_ms"] == 0.0);
  CHECK(metrics["runs"].size() == 2);
}

TEST_CASE("failed commands leave no outputs") {
  const fs::path out = fresh_dir("missing");
  CHECK_THROWS_AS(cmd_train(quick("/nonexistent/cora"), out), DataError);
  CHECK_FALSE(fs::exists(out / "metrics.json"));

  ExperimentConfig diffusion = quick();
  diffusion.model.flow = FlowKind::LinearDiffusion;
  CHECK_THROWS_AS(cmd_energy_trace(diffusion, out), ConfigError);
  CHECK_FALSE(fs::exists(out / "energy.csv"));
}

TEST_CASE("sweep, energy trace, hyperbolicity and mix") {
  ExperimentConfig c = quick();
  c.layers = {2};
  const fs::path sweep = fresh_dir("sweep");
  cmd_sweep_layers(c, sweep);
  std::istringstream csv(slurp(sweep / "sweep.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  CHECK(line == "flow,layers,accuracy_mean,accuracy_std,runs");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 2);

  ExperimentConfig q = quick();
  q.model.energy = EnergyKind::QuadraticKinetic;
  q.model.solver.time = 3.0;
  const fs::path trace = fresh_dir("trace");
  cmd_energy_trace(q, trace);
  const auto e = nlohmann::json::parse(slurp(trace / "energy.json"));
  CHECK(e["rows"] == 4);
  CHECK(e["relative_spread"].get<double>() <= 1e-12);
  CHECK(slurp(trace / "energy.csv").rfind("t,energy\n0,", 0) == 0);

  q.model.solver.time = 0.0;
  cmd_energy_trace(q, trace);
  CHECK(nlohmann::json::parse(slurp(trace / "energy.json"))["rows"] == 1);

  ExperimentConfig h = quick("path:4");
  const fs::path hyp = fresh_dir("hyp");
  cmd_hyperbolicity(h, hyp);
  CHECK(nlohmann::json::parse(slurp(hyp / "hyperbolicity.json"))["max_delta"] == 0.0);

  const fs::path mix = fresh_dir("mix");
  cmd_mix("tree:2:2", "grid:3:3", {}, mix);
  CHECK(nlohmann::json::parse(slurp(mix / "mix.json"))["num_nodes"] == 16);
  CHECK(fs::exists(mix / "dataset" / "edges.txt"));
}
