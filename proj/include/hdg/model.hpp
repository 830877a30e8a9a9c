#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdg/autodiff.hpp"
#include "hdg/hamiltonian.hpp"
#include "hdg/integrators.hpp"

namespace hdg {

/// How node features evolve between t = 0 and t = T.
///  - Hamiltonian: (q, p) under the energy's Hamiltonian field.
///  - VanillaOde: dq/dt = FC(tanh(FC(q))), no momentum.
///  - LinearDiffusion: dq/dt = (Â − I)q, no momentum.
enum class FlowKind { Hamiltonian, VanillaOde, LinearDiffusion };

std::string to_string(FlowKind f);
FlowKind parse_flow_kind(const std::string& name);
std::string to_string(EnergyKind e);
EnergyKind parse_energy_kind(const std::string& name);

struct ModelConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 16;     // r
  std::size_t energy_hidden = 0;   // h, 0 means r
  std::size_t energy_out = 0;      // h_out, 0 means r
  std::size_t num_classes = 2;
  FlowKind flow = FlowKind::Hamiltonian;
  EnergyKind energy = EnergyKind::LearnedGcn;
  SolverConfig solver;
  double dropout = 0.0;
  double energy_eps = 1e-12;
  double fermi_r = 2.0;
  double fermi_t = 1.0;

  std::size_t resolved_energy_hidden() const { return energy_hidden ? energy_hidden : hidden_dim; }
  std::size_t resolved_energy_out() const { return energy_out ? energy_out : hidden_dim; }
  void validate() const;
};

/// All trainable weights. Biases are (1 × width) rows.
struct ModelParams {
  Matrix input_weight;     // raw_dim × r
  Matrix input_bias;       // 1 × r
  Matrix momentum_weight;  // r × r
  Matrix momentum_bias;    // 1 × r
  Matrix energy_w1;        // 2r × h
  Matrix energy_w2;        // h × h_out
  Matrix vanilla_w1;       // r × r
  Matrix vanilla_b1;       // 1 × r
  Matrix vanilla_w2;       // r × r
  Matrix vanilla_b2;       // 1 × r
  Matrix decoder_weight;   // r × classes
  Matrix decoder_bias;     // 1 × classes
};

/// Glorot-uniform weights, zero biases, from a seeded generator.
ModelParams initialize_params(const ModelConfig& cfg, std::uint64_t seed);

struct ParamRef {
  const char* name;
  Matrix* value;
  bool is_weight;  // biases are excluded from weight decay
};

/// The parameters that influence the output for this flow/energy; the
/// decoder is included for node classification only.
std::vector<ParamRef> trainable_params(ModelParams& params, const ModelConfig& cfg,
                                       bool with_decoder);

/// ModelParams lifted to tensors: tape variables, or constants for inference.
struct BoundParams {
  DiffTensor input_weight, input_bias;
  MomentumParams momentum;
  EnergyParams energy;
  DiffTensor vanilla_w1, vanilla_b1, vanilla_w2, vanilla_b2;
  DiffTensor decoder_weight, decoder_bias;
};

/// tape == nullptr binds constants.
BoundParams bind(const ModelParams& params, const ModelConfig& cfg, Tape* tape);

struct EmbedResult {
  DiffTensor z;  // node × r, the q-block at time T
  SolverStats stats;
  std::optional<Trajectory> trajectory;
};

/// Feature compression → momentum → propagation → canonical projection.
/// Dropout on q0 only when `training` and the rate is positive; its mask is
/// drawn from `rng_seed`.
EmbedResult embed(const DiffTensor& raw_features, const SparseGraph& graph,
                  const BoundParams& params, const ModelConfig& cfg, bool training,
                  std::uint64_t rng_seed, bool record_trace = false);

/// Inference-mode convenience wrapper returning plain embeddings.
Matrix embed(const Matrix& raw_features, const SparseGraph& graph, const ModelParams& params,
             const ModelConfig& cfg);

/// The propagation vector field for `cfg.flow` over an OdeState
/// ({q, p} for Hamiltonian, {q} otherwise).
VectorField make_flow_field(const SparseGraph& graph, const BoundParams& params,
                            const ModelConfig& cfg);

/// Row-wise softmax(Z·W + b).
DiffTensor classify(const DiffTensor& z, const BoundParams& params);
Matrix classify(const Matrix& z, const ModelParams& params);

/// 1 / (exp((d² − r)/t) + 1) with d the Euclidean distance of rows u, v.
double fermi_dirac(double sq_dist, double fermi_r, double fermi_t);
double link_probability(const Matrix& z, NodeId u, NodeId v, double fermi_r, double fermi_t);

/// Pre-sigmoid Fermi–Dirac scores (r − d²)/t for each pair, taped.
DiffTensor link_logits(const DiffTensor& z, std::span<const Edge> pairs, double fermi_r,
                       double fermi_t);

/// Model weights and config as JSON (schema_version 1).
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path, const ModelConfig& expected);

/// CSV with a header "node,z0,...", one row per node.
void write_embeddings_csv(const std::string& path, const Matrix& z);

}  // namespace hdg
