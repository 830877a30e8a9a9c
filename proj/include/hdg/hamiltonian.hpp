#pragma once

#include <utility>

#include "hdg/autodiff.hpp"
#include "hdg/graph.hpp"

namespace hdg {

/// Which scalar energy drives the flow.
///  - LearnedGcn: E = ‖Â·tanh(Â·[q‖p]·W1)·W2‖_F (smoothed).
///  - QuadraticKinetic: E = ½‖p‖², the identity-metric case whose flow is the
///    Euclidean exponential map q(t) = q0 + t·p0.
enum class EnergyKind { LearnedGcn, QuadraticKinetic };

/// Energy-network weights. w1 is (2r × h), w2 is (h × h_out). No biases.
struct EnergyParams {
  DiffTensor w1;
  DiffTensor w2;
  double eps = 1e-12;
};

/// Per-node momentum map p_k = q_k·W + b, shared across nodes.
struct MomentumParams {
  DiffTensor weight;  // (r × r)
  DiffTensor bias;    // (1 × r)
};

/// A point (q, p) on the cotangent bundle; both node × r.
struct PhaseState {
  DiffTensor q;
  DiffTensor p;
};

DiffTensor momentum_init(const DiffTensor& q, const MomentumParams& params);

/// Scalar energy of a phase state, returned as a (1,1) tensor.
DiffTensor energy(const PhaseState& state, const SparseGraph& graph, EnergyKind kind,
                  const EnergyParams& params);

/// (dq, dp) = (∂E/∂p, −∂E/∂q).
///
/// For LearnedGcn the gradient is written out in closed form from taped
/// primitives, so the returned field is itself differentiable with respect to
/// the energy weights using first-order reverse mode only. With X = [q‖p]:
///
///   H0 = Â X W1,  H1 = tanh(H0),  Y = Â H1 W2,  E = ‖Y‖_{F,ε}
///   G_Y  = Y / E
///   G_H1 = Â G_Y W2ᵀ
///   G_H0 = G_H1 ⊙ (1 − H1²)
///   G_X  = Â G_H0 W1ᵀ = [∂E/∂q ‖ ∂E/∂p]
std::pair<DiffTensor, DiffTensor> hamiltonian_field(const PhaseState& state,
                                                    const SparseGraph& graph, EnergyKind kind,
                                                    const EnergyParams& params);

/// Both gradient blocks (∂E/∂q, ∂E/∂p), before the symplectic rotation.
std::pair<DiffTensor, DiffTensor> energy_gradient(const PhaseState& state,
                                                  const SparseGraph& graph, EnergyKind kind,
                                                  const EnergyParams& params);

}  // namespace hdg
