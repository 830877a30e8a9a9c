#include "hdg/hamiltonian.hpp"

#include <string>

namespace hdg {

namespace {

void check_state(const PhaseState& s, const SparseGraph& graph) {
  if (!s.q.value().same_shape(s.p.value())) {
    throw ShapeError("phase state: q " + s.q.value().shape_string() + " and p " +
                     s.p.value().shape_string() + " differ");
  }
  if (s.q.rows() != graph.num_nodes()) {
    throw ShapeError("phase state has " + std::to_string(s.q.rows()) + " rows, graph has " +
                     std::to_string(graph.num_nodes()) + " nodes");
  }
}

void check_energy_params(const PhaseState& s, const EnergyParams& params) {
  if (params.w1.rows() != 2 * s.q.cols()) {
    throw ShapeError("energy: W1 " + params.w1.value().shape_string() + " needs " +
                     std::to_string(2 * s.q.cols()) + " rows");
  }
  if (params.w2.rows() != params.w1.cols()) {
    throw ShapeError("energy: W2 " + params.w2.value().shape_string() + " does not chain with W1 " +
                     params.w1.value().shape_string());
  }
}

struct GcnForward {
  DiffTensor h1;
  DiffTensor y;
  DiffTensor e;
};

GcnForward gcn_forward(const PhaseState& s, const SparseGraph& graph, const EnergyParams& params) {
  const DiffTensor x = concat_cols(s.q, s.p);
  const DiffTensor h1 = tanh(matmul(spmm(graph, x), params.w1));
  const DiffTensor y = matmul(spmm(graph, h1), params.w2);
  return {h1, y, frobenius_smooth(y, params.eps)};
}

}  // namespace

DiffTensor momentum_init(const DiffTensor& q, const MomentumParams& params) {
  if (params.weight.rows() != q.cols() || params.weight.cols() != q.cols()) {
    throw ShapeError("momentum_init: weight " + params.weight.value().shape_string() +
                     " for features " + q.value().shape_string());
  }
  return add_row_bias(matmul(q, params.weight), params.bias);
}

DiffTensor energy(const PhaseState& state, const SparseGraph& graph, EnergyKind kind,
                  const EnergyParams& params) {
  check_state(state, graph);
  if (kind == EnergyKind::QuadraticKinetic) {
    return scale(sum(elementwise_mul(state.p, state.p)), 0.5);
  }
  check_energy_params(state, params);
  return gcn_forward(state, graph, params).e;
}

std::pair<DiffTensor, DiffTensor> energy_gradient(const PhaseState& state,
                                                  const SparseGraph& graph, EnergyKind kind,
                                                  const EnergyParams& params) {
  check_state(state, graph);
  if (kind == EnergyKind::QuadraticKinetic) {
    return {DiffTensor(Matrix(state.q.rows(), state.q.cols())), state.p};
  }
  check_energy_params(state, params);
  const auto fwd = gcn_forward(state, graph, params);
  const DiffTensor g_y = divide_by(fwd.y, fwd.e);
  const DiffTensor g_h1 = spmm(graph, matmul(g_y, transpose(params.w2)));
  const DiffTensor dtanh = add_scalar(scale(elementwise_mul(fwd.h1, fwd.h1), -1.0), 1.0);
  const DiffTensor g_h0 = elementwise_mul(g_h1, dtanh);
  const DiffTensor g_x = spmm(graph, matmul(g_h0, transpose(params.w1)));
  return split_cols(g_x, state.q.cols());
}

std::pair<DiffTensor, DiffTensor> hamiltonian_field(const PhaseState& state,
                                                    const SparseGraph& graph, EnergyKind kind,
                                                    const EnergyParams& params) {
  if (kind == EnergyKind::QuadraticKinetic) {
    check_state(state, graph);
    return {state.p, DiffTensor(Matrix(state.p.rows(), state.p.cols()))};
  }
  auto [de_dq, de_dp] = energy_gradient(state, graph, kind, params);
  return {de_dp, scale(de_dq, -1.0)};
}

}  // namespace hdg
