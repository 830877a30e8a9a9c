#include "hdg/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "hdg/errors.hpp"

namespace hdg {

namespace {

using Clock = std::chrono::steady_clock;

Edge ordered(NodeId u, NodeId v) { return u < v ? Edge{u, v} : Edge{v, u}; }

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (epoch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct Bound {
  std::vector<ParamRef> refs;
  std::vector<DiffTensor> tensors;  // parallel to refs
};

// Variables for the trainable params; everything else stays constant.
BoundParams bind_trainable(ModelParams& params, const ModelConfig& cfg, Tape& tape,
                           bool with_decoder, Bound& out) {
  out.refs = trainable_params(params, cfg, with_decoder);
  BoundParams b = bind(params, cfg, nullptr);
  auto slot = [&](const char* name) -> DiffTensor* {
    const std::string n = name;
    if (n == "input_weight") return &b.input_weight;
    if (n == "input_bias") return &b.input_bias;
    if (n == "momentum_weight") return &b.momentum.weight;
    if (n == "momentum_bias") return &b.momentum.bias;
    if (n == "energy_w1") return &b.energy.w1;
    if (n == "energy_w2") return &b.energy.w2;
    if (n == "vanilla_w1") return &b.vanilla_w1;
    if (n == "vanilla_b1") return &b.vanilla_b1;
    if (n == "vanilla_w2") return &b.vanilla_w2;
    if (n == "vanilla_b2") return &b.vanilla_b2;
    if (n == "decoder_weight") return &b.decoder_weight;
    if (n == "decoder_bias") return &b.decoder_bias;
    throw ConfigError("unknown parameter " + n);
  };
  out.tensors.clear();
  for (const auto& r : out.refs) {
    DiffTensor* s = slot(r.name);
    *s = tape.variable(*r.value);
    out.tensors.push_back(*s);
  }
  return b;
}

DiffTensor regularized(const DiffTensor& loss, const Bound& bound, double decay) {
  if (decay == 0.0) return loss;
  std::vector<DiffTensor> weights;
  for (std::size_t i = 0; i < bound.refs.size(); ++i)
    if (bound.refs[i].is_weight) weights.push_back(bound.tensors[i]);
  return add(loss, l2_penalty(weights, decay));
}

void apply_update(const Bound& bound, const Gradients& grads, AdamState& adam, double lr) {
  std::vector<Matrix*> ptrs;
  std::vector<Matrix> g;
  for (std::size_t i = 0; i < bound.refs.size(); ++i) {
    ptrs.push_back(bound.refs[i].value);
    g.push_back(grads.of(bound.tensors[i]));
  }
  adam_step(ptrs, g, adam, lr);
}

template <class Step, class Eval>
TrainResult run_loop(ModelParams params, const TrainConfig& cfg, Step&& step, Eval&& eval) {
  TrainResult res;
  res.params = params;
  res.best_val = -1.0;
  AdamState adam;
  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    double loss = 0.0;
    try {
      loss = step(params, adam, epoch);
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(loss))
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
    const auto [val, test] = eval(params);
    EpochRecord rec{epoch, loss, val, test, cfg.record_wall_time ? elapsed_ms(t0) : 0.0};
    res.log.push_back(rec);
    if (val > res.best_val) {
      res.best_val = val;
      res.best_epoch = epoch;
      res.test_metric = test;
      res.params = params;
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  res.wall_ms = cfg.record_wall_time ? elapsed_ms(start) : 0.0;
  return res;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train: lr must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (patience == 0) throw ConfigError("train: patience must be positive");
  if (!(lp_val_frac >= 0.0 && lp_test_frac >= 0.0 && lp_val_frac + lp_test_frac < 1.0))
    throw ConfigError("train: link split fractions must be >= 0 and sum below 1");
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"val_metric", val_metric},
          {"test_metric", test_metric},
          {"wall_ms", wall_ms}};
}

DiffTensor cross_entropy_loss(const DiffTensor& probs, std::span<const int> labels,
                              std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("cross_entropy_loss: empty mask");
  return mean_neg_log_likelihood(probs, labels, rows);
}

DiffTensor l2_penalty(std::span<const DiffTensor> weights, double decay) {
  DiffTensor total(Matrix(1, 1));
  for (const auto& w : weights) total = add(total, sum(elementwise_mul(w, w)));
  return scale(total, 0.5 * decay);
}

std::vector<Edge> negative_sample(const SparseGraph& graph, std::size_t count, std::mt19937_64& rng,
                                  std::span<const Edge> exclude) {
  const std::size_t n = graph.num_nodes();
  std::set<Edge> banned;
  for (const auto& [u, v] : exclude) banned.insert(ordered(u, v));
  auto allowed = [&](NodeId u, NodeId v) {
    return u != v && !graph.has_edge(u, v) && !banned.contains(ordered(u, v));
  };

  const std::size_t pairs = n < 2 ? 0 : n * (n - 1) / 2;
  std::size_t banned_non_edges = 0;
  for (const auto& [u, v] : banned)
    if (u != v && !graph.has_edge(u, v)) ++banned_non_edges;
  const std::size_t available = pairs - graph.num_edges() - banned_non_edges;
  if (available < count) {
    throw GraphError("negative_sample: requested " + std::to_string(count) + " non-edges, only " +
                     std::to_string(available) + " exist");
  }

  std::vector<Edge> out;
  out.reserve(count);
  if (count * 2 >= available) {
    // Dense regime: enumerate and draw without replacement.
    std::vector<Edge> all;
    all.reserve(available);
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v)
        if (allowed(u, v)) all.emplace_back(u, v);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  }
  std::set<Edge> seen;
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  while (out.size() < count) {
    const NodeId u = pick(rng), v = pick(rng);
    if (!allowed(u, v)) continue;
    if (seen.insert(ordered(u, v)).second) out.push_back(ordered(u, v));
  }
  return out;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state size mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    if (!p.same_shape(grads[i]) || !p.same_shape(state.m[i]))
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));
    auto& pd = p.data();
    const auto& gd = grads[i].data();
    auto& md = state.m[i].data();
    auto& vd = state.v[i].data();
    for (std::size_t k = 0; k < pd.size(); ++k) {
      md[k] = beta1 * md[k] + (1.0 - beta1) * gd[k];
      vd[k] = beta2 * vd[k] + (1.0 - beta2) * gd[k] * gd[k];
      pd[k] -= lr * (md[k] / c1) / (std::sqrt(vd[k] / c2) + eps);
    }
  }
}

double accuracy(const Matrix& probs, std::span<const int> labels, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("accuracy: empty evaluation set");
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    const auto row = probs.row(r);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double roc_auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw DataError("roc_auc: empty positive or negative set");
  std::vector<std::pair<double, bool>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.emplace_back(s, true);
  for (double s : neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second) pos_rank_sum += avg;
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

LinkSplit split_edges(const SparseGraph& graph, double val_frac, double test_frac,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges(graph.edges().begin(), graph.edges().end());
  std::shuffle(edges.begin(), edges.end(), rng);
  const auto m = static_cast<double>(edges.size());
  const auto nv = static_cast<std::size_t>(std::floor(val_frac * m));
  const auto nt = static_cast<std::size_t>(std::floor(test_frac * m));
  if (edges.size() < nv + nt + 1) throw GraphError("split_edges: too few edges to split");

  LinkSplit s;
  s.val_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(nv));
  s.test_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(nv),
                    edges.begin() + static_cast<std::ptrdiff_t>(nv + nt));
  s.train_pos.assign(edges.begin() + static_cast<std::ptrdiff_t>(nv + nt), edges.end());
  for (auto* v : {&s.val_pos, &s.test_pos, &s.train_pos}) std::sort(v->begin(), v->end());

  auto negs = negative_sample(graph, nv + nt, rng);
  std::shuffle(negs.begin(), negs.end(), rng);
  s.val_neg.assign(negs.begin(), negs.begin() + static_cast<std::ptrdiff_t>(nv));
  s.test_neg.assign(negs.begin() + static_cast<std::ptrdiff_t>(nv), negs.end());
  s.train_graph = build_graph(graph.num_nodes(), s.train_pos);
  return s;
}

double evaluate_nc(const DatasetBundle& data, const ModelParams& params, const ModelConfig& cfg,
                   std::span<const std::size_t> rows) {
  const Matrix z = embed(data.features, data.graph, params, cfg);
  return accuracy(classify(z, params), data.labels, rows);
}

double evaluate_lp(const Matrix& z, std::span<const Edge> pos, std::span<const Edge> neg,
                   const ModelConfig& cfg) {
  std::vector<double> ps, ns;
  for (const auto& [u, v] : pos) ps.push_back(link_probability(z, u, v, cfg.fermi_r, cfg.fermi_t));
  for (const auto& [u, v] : neg) ns.push_back(link_probability(z, u, v, cfg.fermi_r, cfg.fermi_t));
  return roc_auc(ps, ns);
}

TrainResult train_node_classifier(const DatasetBundle& data, const ModelConfig& model,
                                  const TrainConfig& cfg) {
  model.validate();
  cfg.validate();
  if (model.input_dim != data.features.cols())
    throw ConfigError("model input_dim does not match feature width");
  if (model.num_classes < data.num_classes)
    throw ConfigError("model num_classes is smaller than the dataset's");
  if (data.splits.train.empty() || data.splits.val.empty() || data.splits.test.empty())
    throw DataError(data.name + ": node classification needs non-empty train/val/test splits");

  const DiffTensor features(data.features);
  auto step = [&](ModelParams& params, AdamState& adam, std::size_t epoch) {
    Tape tape;
    Bound bound;
    const BoundParams b = bind_trainable(params, model, tape, true, bound);
    const DiffTensor z =
        embed(features, data.graph, b, model, true, epoch_seed(cfg.seed, epoch)).z;
    const DiffTensor loss = regularized(
        cross_entropy_loss(classify(z, b), data.labels, data.splits.train), bound, cfg.weight_decay);
    const double value = loss.item();
    if (!std::isfinite(value)) return value;
    apply_update(bound, tape.backward(loss), adam, cfg.lr);
    return value;
  };
  auto eval = [&](const ModelParams& params) {
    const Matrix probs = classify(embed(data.features, data.graph, params, model), params);
    return std::pair{accuracy(probs, data.labels, data.splits.val),
                     accuracy(probs, data.labels, data.splits.test)};
  };
  return run_loop(initialize_params(model, cfg.seed), cfg, step, eval);
}

TrainResult train_link_predictor(const DatasetBundle& data, const LinkSplit& split,
                                 const ModelConfig& model, const TrainConfig& cfg) {
  model.validate();
  cfg.validate();
  if (model.input_dim != data.features.cols())
    throw ConfigError("model input_dim does not match feature width");
  if (split.train_pos.empty() || split.val_pos.empty() || split.test_pos.empty())
    throw DataError(data.name + ": link prediction needs non-empty train/val/test edge sets");

  const DiffTensor features(data.features);
  std::mt19937_64 neg_rng(cfg.seed ^ 0x5DEECE66Dull);
  std::vector<Edge> held_out(split.val_neg);
  held_out.insert(held_out.end(), split.test_neg.begin(), split.test_neg.end());
  held_out.insert(held_out.end(), split.val_pos.begin(), split.val_pos.end());
  held_out.insert(held_out.end(), split.test_pos.begin(), split.test_pos.end());

  auto step = [&](ModelParams& params, AdamState& adam, std::size_t epoch) {
    std::vector<Edge> pairs(split.train_pos);
    const auto negs = negative_sample(data.graph, split.train_pos.size(), neg_rng, held_out);
    pairs.insert(pairs.end(), negs.begin(), negs.end());
    std::vector<double> targets(pairs.size(), 0.0);
    std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(split.train_pos.size()),
              1.0);

    Tape tape;
    Bound bound;
    const BoundParams b = bind_trainable(params, model, tape, false, bound);
    const DiffTensor z =
        embed(features, split.train_graph, b, model, true, epoch_seed(cfg.seed, epoch)).z;
    const DiffTensor loss = regularized(
        bce_with_logits(link_logits(z, pairs, model.fermi_r, model.fermi_t), targets), bound,
        cfg.weight_decay);
    const double value = loss.item();
    if (!std::isfinite(value)) return value;
    apply_update(bound, tape.backward(loss), adam, cfg.lr);
    return value;
  };
  auto eval = [&](const ModelParams& params) {
    const Matrix z = embed(data.features, split.train_graph, params, model);
    return std::pair{evaluate_lp(z, split.val_pos, split.val_neg, model),
                     evaluate_lp(z, split.test_pos, split.test_neg, model)};
  };
  return run_loop(initialize_params(model, cfg.seed), cfg, step, eval);
}

}  // namespace hdg
