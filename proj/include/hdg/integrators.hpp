#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hdg/autodiff.hpp"

namespace hdg {

enum class SolverMethod { Euler, Rk4, Dopri5 };

std::string to_string(SolverMethod m);
SolverMethod parse_solver_method(const std::string& name);

struct SolverConfig {
  SolverMethod method = SolverMethod::Euler;
  double time = 1.0;       // total integration time T
  double step_size = 1.0;  // τ, fixed-step methods only
  double rtol = 1e-6;      // Dopri5 only
  double atol = 1e-8;      // Dopri5 only
  std::size_t max_steps = 10'000;

  /// Throws ConfigError. T = 0 is accepted and means "no propagation".
  void validate() const;
  /// Number of fixed steps T/τ; ConfigError if it is not a whole number.
  std::size_t fixed_step_count() const;
};

/// ODE state: one or more same-shaped-per-slot matrices (q, or q and p).
using OdeState = std::vector<DiffTensor>;
using VectorField = std::function<OdeState(const OdeState&)>;
using EnergyProbe = std::function<double(const OdeState&)>;

/// Values at accepted step boundaries, starting at t = 0.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> energies;  // empty when no probe was given
  std::vector<std::vector<Matrix>> states;
};

struct SolverStats {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t field_evaluations = 0;
  double max_accepted_error = 0.0;  // Dopri5 mixed-tolerance RMS norm
};

struct IntegrationResult {
  OdeState state;
  std::optional<Trajectory> trajectory;
  SolverStats stats;
};

/// Integrates dy/dt = field(y) from 0 to cfg.time.
///
/// The stage arithmetic goes through taped primitives, so gradients of a loss
/// on the end state flow back through every accepted step
/// (discretize-then-optimize). Dopri5 step-size control reads plain values
/// and is never differentiated.
///
/// Throws IntegrationError when Dopri5 exhausts max_steps or the step size
/// underflows; NumericalError propagates from the primitives on non-finite
/// values.
IntegrationResult integrate(const OdeState& y0, const VectorField& field, const SolverConfig& cfg,
                            bool record_trace = false, const EnergyProbe& energy = {});

/// True iff Euler with τ = 1 over `layers` units is bit-identical to applying
/// y ← y + field(y) `layers` times.
bool unroll_equivalence_check(const OdeState& y0, const VectorField& field, std::size_t layers);

/// CSV "t,energy" (energy column left empty without a probe).
void write_energy_csv(std::ostream& os, const Trajectory& traj);
/// CSV "t,slot,node,c0,c1,..." with one row per node per recorded time.
void write_snapshot_csv(std::ostream& os, const Trajectory& traj);

}  // namespace hdg
