#pragma once
// Experiment configs, named presets, and the command implementations behind
// the hdg CLI. Config files are flat "key = value" text; "preset = <name>"
// loads a preset's values first and every other line overrides them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hdg/data.hpp"
#include "hdg/hyperbolicity.hpp"
#include "hdg/model.hpp"
#include "hdg/training.hpp"

namespace hdg {

using ConfigMap = std::map<std::string, std::string>;

/// Names of the shipped presets, sorted.
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ConfigMap preset_values(const std::string& name);

/// Parses "key = value" lines ('#' starts a comment). Errors carry the line.
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<config>");
ConfigMap read_config_file(const std::filesystem::path& path);

/// Resolves a "preset" entry, if present, underneath the remaining keys.
ConfigMap resolve_presets(const ConfigMap& raw);

enum class Task { NodeClassification, LinkPrediction };

struct ExperimentConfig {
  std::string preset;
  Task task = Task::NodeClassification;
  std::string dataset;  // directory or generator spec
  std::uint64_t data_seed = 0;
  bool normalize_features = true;
  ModelConfig model;  // input_dim and num_classes are filled from the data
  TrainConfig train;
  std::size_t runs = 5;  // seeds per reported number: seed, seed+1, ...
  std::vector<std::size_t> layers{2, 4, 8, 16, 32, 64};
  std::string perturb_mode = "feature_noise";
  double magnitude = 0.01;
  DeltaOptions delta;
  std::string checkpoint;  // optional weights for energy-trace
  bool timing = true;      // false zeroes wall_ms so outputs are bit-identical

  /// Throws ConfigError. Does not touch the file system.
  void validate() const;
};

/// Builds a config from resolved key/values. Unknown keys are rejected.
ExperimentConfig make_experiment_config(const ConfigMap& values);

/// Loads the dataset a config names. Missing directories throw DataError.
DatasetBundle resolve_dataset(const std::string& dataset, std::uint64_t data_seed,
                              bool normalize_features);

/// Each command writes into `out` only after all computation succeeded.
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_sweep_layers(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_energy_trace(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_perturb(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_hyperbolicity(const ExperimentConfig& cfg, const std::filesystem::path& out);
void cmd_mix(const std::string& a, const std::string& b, const MixOptions& opts,
             const std::filesystem::path& out);

struct PerturbOutcome {
  double clean = 0.0;
  double perturbed = 0.0;
};

/// Adds N(0, std²) noise to the rows in `rows`.
Matrix add_feature_noise(const Matrix& features, std::span<const std::size_t> rows, double std_dev,
                         std::uint64_t seed);
/// Inserts `count` random non-edges. Throws GraphError when none can be inserted.
SparseGraph add_random_edges(const SparseGraph& graph, std::size_t count, std::uint64_t seed);

/// Test accuracy of a trained model before and after one perturbation.
PerturbOutcome perturb_eval(const DatasetBundle& data, const ModelParams& params,
                            const ModelConfig& model, const std::string& mode, double magnitude,
                            std::uint64_t seed);

}  // namespace hdg
