#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "hdg/data.hpp"
#include "hdg/model.hpp"
#include "json.hpp"

namespace hdg {

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 0.0;  // ½·decay·Σ‖W‖² over weight matrices, biases exempt
  std::size_t epochs = 1000;
  std::size_t patience = 100;
  std::uint64_t seed = 0;
  bool record_wall_time = true;  // false writes wall_ms = 0 so logs are reproducible
  double lp_val_frac = 0.05;
  double lp_test_frac = 0.10;

  void validate() const;
};

/// Mean −log p[label] over `rows`. Throws DataError on an empty mask.
DiffTensor cross_entropy_loss(const DiffTensor& probs, std::span<const int> labels,
                              std::span<const std::size_t> rows);

/// ½·decay·Σ‖W‖², taped.
DiffTensor l2_penalty(std::span<const DiffTensor> weights, double decay);

/// `count` distinct non-edges (u < v), uniform over all non-adjacent pairs.
/// Pairs in `exclude` are also avoided. Throws GraphError if too few remain.
std::vector<Edge> negative_sample(const SparseGraph& graph, std::size_t count, std::mt19937_64& rng,
                                  std::span<const Edge> exclude = {});

struct AdamState {
  std::vector<Matrix> m, v;
  std::size_t step = 0;
};

/// One Adam update with bias correction. State is sized on first use.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& probs, std::span<const int> labels, std::span<const std::size_t> rows);

/// Rank-statistic ROC-AUC with average ranks for ties.
double roc_auc(std::span<const double> pos_scores, std::span<const double> neg_scores);

/// Positive edges split for link prediction, negatives fixed for val/test.
struct LinkSplit {
  std::vector<Edge> train_pos, val_pos, val_neg, test_pos, test_neg;
  SparseGraph train_graph;  // message passing uses training edges only
};

LinkSplit split_edges(const SparseGraph& graph, double val_frac, double test_frac,
                      std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double test_metric = 0.0;
  double wall_ms = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  ModelParams params;  // best-validation checkpoint
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  double test_metric = 0.0;
  double wall_ms = 0.0;
};

/// Full-batch node classification. Validation metric is accuracy.
/// A non-finite loss aborts with NumericalError naming the epoch.
TrainResult train_node_classifier(const DatasetBundle& data, const ModelConfig& model,
                                  const TrainConfig& cfg);

/// Link prediction over `split`. Validation metric is ROC-AUC; fresh
/// negatives are drawn every epoch.
TrainResult train_link_predictor(const DatasetBundle& data, const LinkSplit& split,
                                 const ModelConfig& model, const TrainConfig& cfg);

/// Evaluation helpers for a fixed model.
double evaluate_nc(const DatasetBundle& data, const ModelParams& params, const ModelConfig& cfg,
                   std::span<const std::size_t> rows);
double evaluate_lp(const Matrix& z, std::span<const Edge> pos, std::span<const Edge> neg,
                   const ModelConfig& cfg);

}  // namespace hdg
