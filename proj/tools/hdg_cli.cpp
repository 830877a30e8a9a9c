// hdg: train, sweep, trace and inspect Hamiltonian graph models.
//
// Exit codes: 0 success, 1 domain error, 2 config or command-line error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hdg/errors.hpp"
#include "hdg/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string dataset;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "named preset (see `hdg presets`)");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--dataset", f.dataset, "dataset directory or generator spec");
  cmd->add_option("--set", f.sets, "override, key=value (repeatable)");
}

hdg::ConfigMap gather(const CommonFlags& f, const hdg::ConfigMap& extra) {
  hdg::ConfigMap raw = f.config.empty() ? hdg::ConfigMap{} : hdg::read_config_file(f.config);
  if (!f.preset.empty()) raw["preset"] = f.preset;
  hdg::ConfigMap values = hdg::resolve_presets(raw);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw hdg::ConfigError("--set expects key=value, got '" + s + "'");
    values[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!f.dataset.empty()) values["dataset"] = f.dataset;
  if (f.seed) values["seed"] = std::to_string(*f.seed);
  for (const auto& [k, v] : extra) values[k] = v;
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian graph dynamics toolkit"};
  app.require_subcommand(1);

  CommonFlags train_f, sweep_f, trace_f, perturb_f, hyp_f;
  auto* train = app.add_subcommand("train", "train a model, write metrics, checkpoint, embeddings");
  add_common(train, train_f);

  auto* sweep = app.add_subcommand("sweep-layers", "accuracy vs. depth for hamiltonian and diffusion");
  add_common(sweep, sweep_f);
  std::string layers;
  sweep->add_option("--layers", layers, "comma-separated layer counts");

  auto* trace = app.add_subcommand("energy-trace", "energy at each accepted solver step");
  add_common(trace, trace_f);

  auto* perturb = app.add_subcommand("perturb", "clean vs. perturbed test accuracy");
  add_common(perturb, perturb_f);
  std::string perturb_mode;
  std::optional<double> magnitude;
  perturb->add_option("--mode", perturb_mode, "feature_noise or edge_add");
  perturb->add_option("--magnitude", magnitude, "noise std or edge count");

  auto* hyp = app.add_subcommand("hyperbolicity", "Gromov delta report");
  add_common(hyp, hyp_f);
  std::string delta_mode;
  hyp->add_option("--mode", delta_mode, "exact, sampled or auto");

  auto* mix = app.add_subcommand("mix", "block-diagonal union of two datasets");
  std::string mix_a, mix_b, mix_out = "out";
  hdg::MixOptions mix_opts;
  mix->add_option("--a", mix_a, "first dataset")->required();
  mix->add_option("--b", mix_b, "second dataset")->required();
  mix->add_option("--out", mix_out, "output directory")->capture_default_str();
  mix->add_option("--seed", mix_opts.seed, "split seed");
  mix->add_flag("--disjoint-columns", mix_opts.disjoint_columns, "place b's features after a's");

  app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("presets")) {
      for (const auto& n : hdg::preset_names()) std::cout << n << '\n';
    } else if (train->parsed()) {
      hdg::cmd_train(hdg::make_experiment_config(gather(train_f, {})), train_f.out);
    } else if (sweep->parsed()) {
      hdg::ConfigMap extra;
      if (!layers.empty()) extra["layers"] = layers;
      hdg::cmd_sweep_layers(hdg::make_experiment_config(gather(sweep_f, extra)), sweep_f.out);
    } else if (trace->parsed()) {
      hdg::cmd_energy_trace(hdg::make_experiment_config(gather(trace_f, {})), trace_f.out);
    } else if (perturb->parsed()) {
      hdg::ConfigMap extra;
      if (!perturb_mode.empty()) extra["perturb_mode"] = perturb_mode;
      if (magnitude) {
        if (*magnitude < 0) throw hdg::ConfigError("--magnitude must be >= 0");
        std::ostringstream ss;
        ss.precision(17);
        ss << *magnitude;
        extra["magnitude"] = ss.str();
      }
      hdg::cmd_perturb(hdg::make_experiment_config(gather(perturb_f, extra)), perturb_f.out);
    } else if (hyp->parsed()) {
      hdg::ConfigMap extra;
      if (!delta_mode.empty()) extra["delta_mode"] = delta_mode;
      hdg::cmd_hyperbolicity(hdg::make_experiment_config(gather(hyp_f, extra)), hyp_f.out);
    } else if (mix->parsed()) {
      hdg::cmd_mix(mix_a, mix_b, mix_opts, mix_out);
    }
  } catch (const hdg::ConfigError& e) {
    std::cerr << "hdg: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hdg: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
