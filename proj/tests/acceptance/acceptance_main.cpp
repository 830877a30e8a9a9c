// Acceptance run: one PASS/FAIL (or SKIP for optional real-data checks) line per
// criterion. Exit status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "hdg/experiment.hpp"
#include "hdg/hamiltonian.hpp"
#include "hdg/integrators.hpp"
#include "hdg/training.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace hdg;
using namespace hdg::testing;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

const fs::path kWork = fs::temp_directory_path() / "hdg_acceptance";
const fs::path kData = HDG_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

struct Instance {
  SparseGraph graph;
  EnergyParams params;
  Matrix q, p;
};

Instance random_instance(std::size_t n, std::size_t r, std::mt19937_64& rng) {
  Instance in;
  in.graph = random_graph(n, std::min(1.0, 3.0 / static_cast<double>(n)), rng, true);
  in.params = {DiffTensor(random_matrix(2 * r, r, rng)), DiffTensor(random_matrix(r, r, rng)), 1e-12};
  in.q = random_matrix(n, r, rng);
  in.p = random_matrix(n, r, rng);
  return in;
}

VectorField gcn_field(const Instance& in) {
  return [&in](const OdeState& y) {
    auto [dq, dp] = hamiltonian_field({y[0], y[1]}, in.graph, EnergyKind::LearnedGcn, in.params);
    return OdeState{dq, dp};
  };
}

// 1. Field vs. central differences of the energy.
Outcome field_correctness() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> nodes(5, 20), width(2, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(nodes(rng), width(rng), rng);
    auto e = [&](const Matrix& q, const Matrix& p) {
      return energy({DiffTensor(q), DiffTensor(p)}, in.graph, EnergyKind::LearnedGcn, in.params).item();
    };
    auto [dq, dp] = hamiltonian_field({DiffTensor(in.q), DiffTensor(in.p)}, in.graph,
                                      EnergyKind::LearnedGcn, in.params);
    const Matrix de_dp = finite_diff([&](const Matrix& p) { return e(in.q, p); }, in.p, 1e-5);
    const Matrix de_dq = finite_diff([&](const Matrix& q) { return e(q, in.p); }, in.q, 1e-5);
    worst = std::max({worst, rel_err(dq.value(), de_dp), rel_err(-1.0 * dp.value(), de_dq)});
  }
  return verdict(worst <= 1e-5, "max relative error " + fmt("%.2e", worst) + " over 50 instances");
}

// 2. Energy drift along tight Dopri5 trajectories.
Outcome energy_conservation() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(200 + seed);
    const Instance in = random_instance(50, 3, rng);
    SolverConfig c;
    c.method = SolverMethod::Dopri5;
    c.time = 5.0;
    c.rtol = c.atol = 1e-6;
    const EnergyProbe probe = [&](const OdeState& y) {
      return energy({y[0], y[1]}, in.graph, EnergyKind::LearnedGcn, in.params).item();
    };
    const auto res = integrate({DiffTensor(in.q), DiffTensor(in.p)}, gcn_field(in), c, true, probe);
    const auto& e = res.trajectory->energies;
    for (double v : e) worst = std::max(worst, std::abs(v - e.front()) / std::abs(e.front()));
  }
  return verdict(worst <= 1e-3, "max relative drift " + fmt("%.2e", worst) + " over 10 seeds");
}

// 3. Quadratic kinetic energy: endpoint is q0 + T p0.
Outcome exponential_map() {
  std::mt19937_64 rng(300);
  const SparseGraph g = random_graph(12, 0.3, rng);
  const Matrix q0 = random_matrix(12, 4, rng), p0 = random_matrix(12, 4, rng);
  const double t = 3.0;
  const VectorField f = [&](const OdeState& y) {
    auto [dq, dp] = hamiltonian_field({y[0], y[1]}, g, EnergyKind::QuadraticKinetic, {});
    return OdeState{dq, dp};
  };
  Matrix expect = q0;
  for (std::size_t i = 0; i < expect.data().size(); ++i) expect.data()[i] += t * p0.data()[i];
  double worst = 0.0;
  for (SolverMethod m : {SolverMethod::Euler, SolverMethod::Rk4, SolverMethod::Dopri5}) {
    SolverConfig c;
    c.method = m;
    c.time = t;
    c.step_size = 0.5;
    worst = std::max(worst, max_abs_diff(integrate({DiffTensor(q0), DiffTensor(p0)}, f, c).state[0].value(),
                                         expect));
  }
  return verdict(worst <= 1e-12, "max endpoint error " + fmt("%.2e", worst) + " across euler, rk4, dopri5");
}

// 4. Euler with unit steps against layers applied by hand.
Outcome layer_stack() {
  std::mt19937_64 rng(400);
  std::string detail;
  bool ok = true;
  for (std::size_t layers : {1u, 8u, 64u}) {
    const Instance in = random_instance(20, 3, rng);
    const VectorField f = gcn_field(in);
    SolverConfig c;
    c.time = static_cast<double>(layers);
    const auto solved = integrate({DiffTensor(in.q), DiffTensor(in.p)}, f, c).state;
    Matrix q = in.q, p = in.p;
    for (std::size_t l = 0; l < layers; ++l) {
      const OdeState k = f({DiffTensor(q), DiffTensor(p)});
      for (std::size_t i = 0; i < q.data().size(); ++i) {
        q.data()[i] += k[0].value().data()[i];
        p.data()[i] += k[1].value().data()[i];
      }
    }
    const bool same = solved[0].value() == q && solved[1].value() == p;
    ok &= same;
    detail += "T=" + std::to_string(layers) + (same ? " identical; " : " differs; ");
  }
  return verdict(ok, detail.substr(0, detail.size() - 2));
}

// 5. Error ratios when halving the step.
Outcome solver_order() {
  std::mt19937_64 rng(500);
  double e_lo = 1e9, e_hi = 0.0, r_lo = 1e9, r_hi = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_instance(10, 3, rng);
    const OdeState y0{DiffTensor(in.q), DiffTensor(in.p)};
    SolverConfig ref;
    ref.method = SolverMethod::Dopri5;
    ref.rtol = ref.atol = 1e-10;
    const Matrix truth = integrate(y0, gcn_field(in), ref).state[0].value();
    auto err = [&](SolverMethod m, double tau) {
      SolverConfig c;
      c.method = m;
      c.step_size = tau;
      return max_abs_diff(integrate(y0, gcn_field(in), c).state[0].value(), truth);
    };
    const double e = err(SolverMethod::Euler, 0.02) / err(SolverMethod::Euler, 0.01);
    const double r = err(SolverMethod::Rk4, 0.2) / err(SolverMethod::Rk4, 0.1);
    e_lo = std::min(e_lo, e), e_hi = std::max(e_hi, e);
    r_lo = std::min(r_lo, r), r_hi = std::max(r_hi, r);
  }
  const bool ok = e_lo >= 1.6 && e_hi <= 2.6 && r_lo >= 10.0 && r_hi <= 24.0;
  return verdict(ok, "euler ratios " + fmt("%.3f", e_lo) + ".." + fmt("%.3f", e_hi) + ", rk4 ratios " +
                         fmt("%.2f", r_lo) + ".." + fmt("%.2f", r_hi));
}

// 6. Tape gradient of the training loss vs. finite differences, every block.
Outcome training_gradients() {
  std::mt19937_64 rng(600);
  const SparseGraph g = random_graph(6, 0.5, rng, true);
  const Matrix x = random_matrix(6, 3, rng);
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  const std::vector<std::size_t> rows{0, 1, 2, 4};
  double worst = 0.0;
  std::size_t blocks = 0;
  for (FlowKind flow : {FlowKind::Hamiltonian, FlowKind::VanillaOde, FlowKind::LinearDiffusion}) {
    ModelConfig m;
    m.input_dim = 3;
    m.hidden_dim = 3;
    m.num_classes = 3;
    m.flow = flow;
    m.solver.time = 2.0;
    ModelParams p = initialize_params(m, 9);
    auto loss_of = [&](const BoundParams& b) {
      return cross_entropy_loss(classify(embed(DiffTensor(x), g, b, m, false, 0).z, b), labels, rows);
    };
    Tape tape;
    const BoundParams b = bind(p, m, &tape);
    const Gradients grads = tape.backward(loss_of(b));
    const std::vector<std::pair<Matrix*, DiffTensor>> vars{
        {&p.input_weight, b.input_weight},       {&p.input_bias, b.input_bias},
        {&p.momentum_weight, b.momentum.weight}, {&p.momentum_bias, b.momentum.bias},
        {&p.energy_w1, b.energy.w1},             {&p.energy_w2, b.energy.w2},
        {&p.vanilla_w1, b.vanilla_w1},           {&p.vanilla_b1, b.vanilla_b1},
        {&p.vanilla_w2, b.vanilla_w2},           {&p.vanilla_b2, b.vanilla_b2},
        {&p.decoder_weight, b.decoder_weight},   {&p.decoder_bias, b.decoder_bias}};
    std::set<const Matrix*> used;
    for (const auto& ref : trainable_params(p, m, true)) used.insert(ref.value);
    for (const auto& [block, var] : vars) {
      if (!used.count(block)) continue;
      const Matrix saved = *block;
      const Matrix fd = finite_diff(
          [&](const Matrix& v) {
            *block = v;
            const double out = loss_of(bind(p, m, nullptr)).item();
            *block = saved;
            return out;
          },
          saved, 1e-4);
      worst = std::max(worst, rel_err(grads.of(var), fd));
      ++blocks;
    }
  }
  return verdict(worst <= 1e-4, "max relative error " + fmt("%.2e", worst) + " over " +
                                    std::to_string(blocks) + " parameter blocks, three flows");
}

ExperimentConfig tree_preset(const ConfigMap& extra = {}) {
  ConfigMap m = resolve_presets({{"preset", "tree-synthetic"}});
  m["runs"] = "5";
  m["timing"] = "false";
  for (const auto& [k, v] : extra) m[k] = v;
  return make_experiment_config(m);
}

// 7. Depth sweep on the depth-7 tree.
Outcome oversmoothing() {
  const fs::path out = kWork / "sweep";
  cmd_sweep_layers(tree_preset({{"layers", "2,8,32,64"}}), out);
  double hdg_lo = 1.0, hdg_hi = 0.0, diff2 = 0.0, diff64 = 0.0;
  std::string hdg_list;
  const nlohmann::json sweep = read_json(out / "sweep.json");
  for (const auto& row : sweep["rows"]) {
    double mean = 0.0;
    for (double a : row["accuracy"]) mean += a;
    mean /= static_cast<double>(row["accuracy"].size());
    const int layers = row["layers"];
    if (row["flow"] == "hamiltonian") {
      hdg_lo = std::min(hdg_lo, mean);
      hdg_hi = std::max(hdg_hi, mean);
      hdg_list += fmt("%.1f", 100 * mean) + (layers == 64 ? "" : "/");
    } else if (layers == 2) {
      diff2 = mean;
    } else if (layers == 64) {
      diff64 = mean;
    }
  }
  const double spread = 100 * (hdg_hi - hdg_lo), drop = 100 * (diff2 - diff64);
  return verdict(spread <= 5.0 && drop >= 15.0,
                 "hdg T=2/8/32/64 " + hdg_list + " (spread " + fmt("%.1f", spread) +
                     " pts), diffusion " + fmt("%.1f", 100 * diff2) + " -> " + fmt("%.1f", 100 * diff64) +
                     " (drop " + fmt("%.1f", drop) + " pts)");
}

// 8. Cora, only with supplied data.
Outcome real_data_band() {
  const fs::path cora = kData / "cora";
  if (!fs::is_directory(cora)) return {Status::Skip, "optional: no dataset at " + cora.string()};
  auto run_preset = [&](const std::string& preset) {
    ConfigMap m = resolve_presets({{"preset", preset}});
    m["dataset"] = cora.string();
    m["runs"] = "1";
    const fs::path out = kWork / preset;
    cmd_train(make_experiment_config(m), out);
    return read_json(out / "metrics.json")["test_metric"].get<double>();
  };
  const double nc = run_preset("cora-nc");
  const double lp = run_preset("cora-lp");
  return verdict(nc >= 0.75 && lp >= 0.90,
                 "cora nc accuracy " + fmt("%.4f", nc) + " (>= 0.75), lp roc-auc " + fmt("%.4f", lp) +
                     " (>= 0.90)");
}

// 9. Exact delta against brute force.
Outcome delta_oracle() {
  std::mt19937_64 rng(900);
  DeltaOptions exact;
  exact.mode = DeltaMode::Exact;
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng() % 9;
    const auto edges = random_edges(n, 0.2 + 0.05 * static_cast<double>(rng() % 10), rng, trial % 3 != 0);
    const auto rep = gromov_delta(build_graph(n, edges), exact);
    const auto [delta, count] = brute_force_delta(n, edges);
    mismatches += rep.max_delta != delta || rep.quadruples_examined != count;
  }
  const double p4 = gromov_delta(generate_path(4).graph, exact).max_delta;
  const double c4 = gromov_delta(generate_cycle(4).graph, exact).max_delta;
  double trees = 0.0;
  for (const TreeSpec& s : {TreeSpec{7, 2}, TreeSpec{4, 3}, TreeSpec{3, 5}, TreeSpec{1, 2}})
    trees = std::max(trees, gromov_delta(generate_tree(s).graph, exact).max_delta);
  return verdict(mismatches == 0 && p4 == 0.0 && c4 == 1.0 && trees == 0.0,
                 std::to_string(mismatches) + "/100 oracle mismatches, P4 " + fmt("%g", p4) + ", C4 " +
                     fmt("%g", c4) + ", trees max " + fmt("%g", trees));
}

// 10. Block-diagonal union.
Outcome mixed_structure() {
  auto scan = [](const DatasetBundle& a, const DatasetBundle& b) {
    const DatasetBundle m = mix_datasets(a, b);
    const std::size_t na = a.num_nodes();
    bool ok = m.num_nodes() == na + b.num_nodes();
    for (const auto& [u, v] : m.graph.edges()) ok &= (u < na) == (v < na);
    const CsrMatrix& adj = m.graph.adjacency();
    for (std::size_t u = 0; u < m.num_nodes(); ++u)
      for (std::size_t v = 0; v < m.num_nodes(); ++v)
        if ((u < na) != (v < na)) ok &= adj.at(u, v) == 0.0;
    return std::pair{ok, m.num_nodes()};
  };
  const auto [ok1, n1] = scan(generate_tree({5, 2}), generate_grid(6, 7));
  const auto [ok2, n2] = scan(generate_cycle(30), generate_from_spec("tree:3:3", 1));
  bool ok = ok1 && ok2 && n1 == 63 + 42 && n2 == 30 + 40;
  std::string detail = "synthetic mixes of " + std::to_string(n1) + " and " + std::to_string(n2) +
                       " nodes, cross-block scan clean: " + (ok1 && ok2 ? "yes" : "no");
  const fs::path airport = kData / "airport", cora = kData / "cora";
  if (fs::is_directory(airport) && fs::is_directory(cora)) {
    const auto [ok3, n3] = scan(load_dataset(airport), load_dataset(cora));
    ok &= ok3 && n3 == 5896;
    detail += "; airport + cora " + std::to_string(n3) + " nodes";
  } else {
    detail += "; airport + cora skipped (no data)";
  }
  return verdict(ok, detail);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HDG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 11. Every command twice, byte comparison of every output file.
Outcome determinism() {
  const std::string common = "--dataset tree:5:2:attribute --set epochs=40 --set runs=2 --set timing=false";
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train " + common},
      {"sweep", "sweep-layers " + common + " --layers 2,8"},
      {"trace", "energy-trace " + common + " --set solver=dopri5 --set time=3"},
      {"perturb", "perturb " + common + " --magnitude 0.05"},
      {"edges", "perturb " + common + " --mode edge_add --magnitude 10"},
      {"delta", "hyperbolicity --dataset grid:8:8 --mode sampled --set delta_samples=20000"},
      {"mix", "mix --a tree:3:2 --b grid:3:3 --seed 4"},
  };
  std::size_t files = 0;
  std::string bad;
  for (const auto& [name, args] : commands) {
    std::vector<std::set<std::string>> listing(2);
    std::vector<fs::path> dirs{kWork / ("det_" + name + "_a"), kWork / ("det_" + name + "_b")};
    for (int i = 0; i < 2; ++i) {
      fs::remove_all(dirs[i]);
      if (run_cli(args + " --out " + dirs[i].string()) != 0) return {Status::Fail, name + " failed to run"};
      for (const auto& e : fs::recursive_directory_iterator(dirs[i]))
        if (e.is_regular_file()) listing[i].insert(fs::relative(e.path(), dirs[i]).string());
    }
    if (listing[0] != listing[1] || listing[0].empty()) bad += name + " (file set) ";
    for (const auto& f : listing[0]) {
      ++files;
      if (slurp(dirs[0] / f) != slurp(dirs[1] / f)) bad += name + "/" + f + " ";
    }
  }
  return verdict(bad.empty(), std::to_string(commands.size()) + " commands, " + std::to_string(files) +
                                  " files compared" + (bad.empty() ? ", all identical" : ", differ: " + bad));
}

// 12. Feature noise on test nodes of the tree.
Outcome perturbation_stability() {
  const fs::path out = kWork / "perturb";
  cmd_perturb(tree_preset({{"perturb_mode", "feature_noise"}, {"magnitude", "0.01"}}), out);
  const auto j = read_json(out / "perturb.json");
  const double drop = 100 * j["drop"].get<double>();
  double worst = 0.0;
  for (const auto& r : j["runs"])
    worst = std::max(worst, 100 * std::abs(r["clean"].get<double>() - r["perturbed"].get<double>()));
  return verdict(std::abs(drop) <= 5.0,
                 "clean " + fmt("%.1f", 100 * j["clean_accuracy"].get<double>()) + ", perturbed " +
                     fmt("%.1f", 100 * j["perturbed_accuracy"].get<double>()) + " (change " +
                     fmt("%.2f", drop) + " pts; largest single-seed change " + fmt("%.2f", worst) + ")");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "field correctness", 30, field_correctness},
      {2, "energy conservation", 120, energy_conservation},
      {3, "exponential-map degeneration", 0, exponential_map},
      {4, "layer-stack equivalence", 0, layer_stack},
      {5, "solver order", 0, solver_order},
      {6, "end-to-end training gradients", 0, training_gradients},
      {7, "over-smoothing contrast", 600, oversmoothing},
      {8, "real-data band", 900, real_data_band},
      {9, "delta oracle equivalence", 0, delta_oracle},
      {10, "mixed-dataset structure", 0, mixed_structure},
      {11, "determinism", 0, determinism},
      {12, "perturbation stability", 0, perturbation_stability},
  };
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s && o.status == Status::Pass) {
      o.status = Status::Fail;
      o.detail += "; over the " + fmt("%.0f", c.limit_s) + " s budget";
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failures += o.status == Status::Fail;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", c.id, tag, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
