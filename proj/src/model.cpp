#include "hdg/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace hdg {

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

DiffTensor lift(const Matrix& m, Tape* tape) {
  return tape ? tape->variable(m) : DiffTensor(m);
}

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

#define HDG_PARAM_FIELDS(X)                                                                    \
  X(input_weight) X(input_bias) X(momentum_weight) X(momentum_bias) X(energy_w1) X(energy_w2) \
      X(vanilla_w1) X(vanilla_b1) X(vanilla_w2) X(vanilla_b2) X(decoder_weight) X(decoder_bias)

}  // namespace

std::string to_string(FlowKind f) {
  switch (f) {
    case FlowKind::Hamiltonian:
      return "hamiltonian";
    case FlowKind::VanillaOde:
      return "vanilla";
    case FlowKind::LinearDiffusion:
      return "diffusion";
  }
  return "?";
}

FlowKind parse_flow_kind(const std::string& name) {
  if (name == "hamiltonian") return FlowKind::Hamiltonian;
  if (name == "vanilla") return FlowKind::VanillaOde;
  if (name == "diffusion") return FlowKind::LinearDiffusion;
  throw ConfigError("unknown flow '" + name + "' (expected hamiltonian, vanilla, diffusion)");
}

std::string to_string(EnergyKind e) {
  return e == EnergyKind::LearnedGcn ? "learned" : "quadratic";
}

EnergyKind parse_energy_kind(const std::string& name) {
  if (name == "learned") return EnergyKind::LearnedGcn;
  if (name == "quadratic") return EnergyKind::QuadraticKinetic;
  throw ConfigError("unknown energy '" + name + "' (expected learned, quadratic)");
}

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("model: input_dim must be positive");
  if (hidden_dim == 0) throw ConfigError("model: hidden_dim must be positive");
  if (num_classes == 0) throw ConfigError("model: num_classes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
  if (!(fermi_t > 0.0)) throw ConfigError("model: fermi_t must be positive");
  if (!(energy_eps >= 0.0)) throw ConfigError("model: energy_eps must be >= 0");
  solver.validate();
}

ModelParams initialize_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const std::size_t r = cfg.hidden_dim;
  const std::size_t h = cfg.resolved_energy_hidden();
  ModelParams p;
  p.input_weight = glorot(cfg.input_dim, r, rng);
  p.input_bias = Matrix(1, r);
  p.momentum_weight = glorot(r, r, rng);
  p.momentum_bias = Matrix(1, r);
  p.energy_w1 = glorot(2 * r, h, rng);
  p.energy_w2 = glorot(h, cfg.resolved_energy_out(), rng);
  p.vanilla_w1 = glorot(r, r, rng);
  p.vanilla_b1 = Matrix(1, r);
  p.vanilla_w2 = glorot(r, r, rng);
  p.vanilla_b2 = Matrix(1, r);
  p.decoder_weight = glorot(r, cfg.num_classes, rng);
  p.decoder_bias = Matrix(1, cfg.num_classes);
  return p;
}

std::vector<ParamRef> trainable_params(ModelParams& p, const ModelConfig& cfg, bool with_decoder) {
  std::vector<ParamRef> out{{"input_weight", &p.input_weight, true},
                            {"input_bias", &p.input_bias, false}};
  switch (cfg.flow) {
    case FlowKind::Hamiltonian:
      out.push_back({"momentum_weight", &p.momentum_weight, true});
      out.push_back({"momentum_bias", &p.momentum_bias, false});
      if (cfg.energy == EnergyKind::LearnedGcn) {
        out.push_back({"energy_w1", &p.energy_w1, true});
        out.push_back({"energy_w2", &p.energy_w2, true});
      }
      break;
    case FlowKind::VanillaOde:
      out.push_back({"vanilla_w1", &p.vanilla_w1, true});
      out.push_back({"vanilla_b1", &p.vanilla_b1, false});
      out.push_back({"vanilla_w2", &p.vanilla_w2, true});
      out.push_back({"vanilla_b2", &p.vanilla_b2, false});
      break;
    case FlowKind::LinearDiffusion:
      break;
  }
  if (with_decoder) {
    out.push_back({"decoder_weight", &p.decoder_weight, true});
    out.push_back({"decoder_bias", &p.decoder_bias, false});
  }
  return out;
}

BoundParams bind(const ModelParams& p, const ModelConfig& cfg, Tape* tape) {
  BoundParams b;
  b.input_weight = lift(p.input_weight, tape);
  b.input_bias = lift(p.input_bias, tape);
  b.momentum = {lift(p.momentum_weight, tape), lift(p.momentum_bias, tape)};
  b.energy = {lift(p.energy_w1, tape), lift(p.energy_w2, tape), cfg.energy_eps};
  b.vanilla_w1 = lift(p.vanilla_w1, tape);
  b.vanilla_b1 = lift(p.vanilla_b1, tape);
  b.vanilla_w2 = lift(p.vanilla_w2, tape);
  b.vanilla_b2 = lift(p.vanilla_b2, tape);
  b.decoder_weight = lift(p.decoder_weight, tape);
  b.decoder_bias = lift(p.decoder_bias, tape);
  return b;
}

VectorField make_flow_field(const SparseGraph& graph, const BoundParams& params,
                            const ModelConfig& cfg) {
  switch (cfg.flow) {
    case FlowKind::Hamiltonian:
      return [&graph, &params, kind = cfg.energy](const OdeState& y) {
        auto [dq, dp] = hamiltonian_field({y[0], y[1]}, graph, kind, params.energy);
        return OdeState{dq, dp};
      };
    case FlowKind::VanillaOde:
      return [&params](const OdeState& y) {
        const DiffTensor h = tanh(add_row_bias(matmul(y[0], params.vanilla_w1), params.vanilla_b1));
        return OdeState{add_row_bias(matmul(h, params.vanilla_w2), params.vanilla_b2)};
      };
    case FlowKind::LinearDiffusion:
      return [&graph](const OdeState& y) { return OdeState{sub(spmm(graph, y[0]), y[0])}; };
  }
  throw ConfigError("unhandled flow kind");
}

EmbedResult embed(const DiffTensor& raw_features, const SparseGraph& graph,
                  const BoundParams& params, const ModelConfig& cfg, bool training,
                  std::uint64_t rng_seed, bool record_trace) {
  if (raw_features.rows() != graph.num_nodes()) {
    throw ShapeError("embed: " + std::to_string(raw_features.rows()) + " feature rows for " +
                     std::to_string(graph.num_nodes()) + " nodes");
  }
  DiffTensor q0 = add_row_bias(matmul(raw_features, params.input_weight), params.input_bias);
  if (training && cfg.dropout > 0.0) {
    std::mt19937_64 rng(rng_seed);
    std::bernoulli_distribution keep(1.0 - cfg.dropout);
    const double inv_keep = 1.0 / (1.0 - cfg.dropout);
    Matrix mask(q0.rows(), q0.cols());
    for (double& v : mask.data()) v = keep(rng) ? inv_keep : 0.0;
    q0 = elementwise_mul(q0, DiffTensor(std::move(mask)));
  }

  OdeState y0{q0};
  if (cfg.flow == FlowKind::Hamiltonian) y0.push_back(momentum_init(q0, params.momentum));

  const VectorField field = make_flow_field(graph, params, cfg);
  EnergyProbe probe;
  if (record_trace && cfg.flow == FlowKind::Hamiltonian) {
    probe = [&graph, &params, &cfg](const OdeState& y) {
      const EnergyParams e{params.energy.w1.detach(), params.energy.w2.detach(), params.energy.eps};
      return energy({y[0].detach(), y[1].detach()}, graph, cfg.energy, e).item();
    };
  }
  IntegrationResult res = integrate(y0, field, cfg.solver, record_trace, probe);
  return {res.state[0], res.stats, std::move(res.trajectory)};
}

Matrix embed(const Matrix& raw_features, const SparseGraph& graph, const ModelParams& params,
             const ModelConfig& cfg) {
  const BoundParams b = bind(params, cfg, nullptr);
  return embed(DiffTensor(raw_features), graph, b, cfg, false, 0).z.value();
}

DiffTensor classify(const DiffTensor& z, const BoundParams& params) {
  return softmax_rows(add_row_bias(matmul(z, params.decoder_weight), params.decoder_bias));
}

Matrix classify(const Matrix& z, const ModelParams& params) {
  BoundParams b;
  b.decoder_weight = DiffTensor(params.decoder_weight);
  b.decoder_bias = DiffTensor(params.decoder_bias);
  return classify(DiffTensor(z), b).value();
}

double fermi_dirac(double sq_dist, double fermi_r, double fermi_t) {
  const double x = (sq_dist - fermi_r) / fermi_t;
  if (x > 0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (std::exp(x) + 1.0);
}

double link_probability(const Matrix& z, NodeId u, NodeId v, double fermi_r, double fermi_t) {
  if (u >= z.rows() || v >= z.rows()) throw ShapeError("link_probability: node out of range");
  double d2 = 0.0;
  for (std::size_t j = 0; j < z.cols(); ++j) {
    const double d = z(u, j) - z(v, j);
    d2 += d * d;
  }
  return fermi_dirac(d2, fermi_r, fermi_t);
}

DiffTensor link_logits(const DiffTensor& z, std::span<const Edge> pairs, double fermi_r,
                       double fermi_t) {
  return add_scalar(scale(pair_sq_distance(z, pairs), -1.0 / fermi_t), fermi_r / fermi_t);
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["input_dim"] = cfg.input_dim;
  j["hidden_dim"] = cfg.hidden_dim;
  j["num_classes"] = cfg.num_classes;
  j["flow"] = to_string(cfg.flow);
  j["energy"] = to_string(cfg.energy);
#define HDG_SAVE(name) j["params"][#name] = matrix_json(params.name);
  HDG_PARAM_FIELDS(HDG_SAVE)
#undef HDG_SAVE
  std::ofstream os(path);
  if (!os) throw DataError("cannot write checkpoint " + path);
  os << j.dump(1) << '\n';
}

ModelParams load_checkpoint(const std::string& path, const ModelConfig& expected) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read checkpoint " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path + ": " + e.what());
  }
  ModelParams p;
  try {
#define HDG_LOAD(name) p.name = matrix_from_json(j.at("params").at(#name));
    HDG_PARAM_FIELDS(HDG_LOAD)
#undef HDG_LOAD
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path + ": " + e.what());
  }
  if (p.input_weight.rows() != expected.input_dim || p.input_weight.cols() != expected.hidden_dim ||
      p.decoder_weight.cols() != expected.num_classes) {
    throw DataError("checkpoint " + path + " does not match the model shape");
  }
  return p;
}

void write_embeddings_csv(const std::string& path, const Matrix& z) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os.precision(17);
  os << "node";
  for (std::size_t j = 0; j < z.cols(); ++j) os << ",z" << j;
  os << '\n';
  for (std::size_t i = 0; i < z.rows(); ++i) {
    os << i;
    for (double v : z.row(i)) os << ',' << v;
    os << '\n';
  }
}

}  // namespace hdg
