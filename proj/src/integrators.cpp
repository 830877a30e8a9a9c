#include "hdg/integrators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace hdg {

namespace {

using Stage = std::pair<double, const OdeState*>;

/// y + Σ coeff·k, skipping zero coefficients. Recorded on the tape.
OdeState combine(const OdeState& y, std::initializer_list<Stage> terms) {
  OdeState out;
  out.reserve(y.size());
  for (std::size_t slot = 0; slot < y.size(); ++slot) {
    DiffTensor acc = y[slot];
    for (const auto& [coeff, k] : terms) {
      if (coeff == 0.0) continue;
      acc = add(acc, scale((*k)[slot], coeff));
    }
    out.push_back(std::move(acc));
  }
  return out;
}

OdeState checked_eval(const VectorField& field, const OdeState& y, SolverStats& stats) {
  OdeState k = field(y);
  ++stats.field_evaluations;
  if (k.size() != y.size()) throw ShapeError("vector field returned wrong number of slots");
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!k[i].value().same_shape(y[i].value())) {
      throw ShapeError("vector field slot " + std::to_string(i) + " has shape " +
                       k[i].value().shape_string() + ", state has " + y[i].value().shape_string());
    }
  }
  return k;
}

std::vector<Matrix> values_of(const OdeState& y) {
  std::vector<Matrix> out;
  out.reserve(y.size());
  for (const auto& t : y) out.push_back(t.value());
  return out;
}

class TraceRecorder {
 public:
  TraceRecorder(bool enabled, const EnergyProbe& energy) : energy_(energy) {
    if (enabled) traj_.emplace();
  }
  void record(double t, const OdeState& y) {
    if (!traj_) return;
    traj_->times.push_back(t);
    if (energy_) traj_->energies.push_back(energy_(y));
    traj_->states.push_back(values_of(y));
  }
  std::optional<Trajectory> take() { return std::move(traj_); }

 private:
  const EnergyProbe& energy_;
  std::optional<Trajectory> traj_;
};

// Dormand–Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// b − b̂ (fifth minus embedded fourth order weights).
constexpr std::array<double, 7> err_w = {71.0 / 57600.0,      0.0,         -71.0 / 16695.0,
                                         71.0 / 1920.0,       -17253.0 / 339200.0,
                                         22.0 / 525.0,        -1.0 / 40.0};

double rms_scaled(const std::vector<Matrix>& v, const OdeState& y0, const OdeState* y1, double atol,
                  double rtol) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < v.size(); ++s) {
    for (std::size_t i = 0; i < v[s].size(); ++i) {
      double mag = std::abs(y0[s].value().data()[i]);
      if (y1) mag = std::max(mag, std::abs((*y1)[s].value().data()[i]));
      const double r = v[s].data()[i] / (atol + rtol * mag);
      acc += r * r;
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

/// Hairer–Nørsett–Wanner starting step heuristic, evaluated on plain values.
double initial_step(const VectorField& field, const OdeState& y0, const OdeState& f0,
                    const SolverConfig& cfg, SolverStats& stats) {
  const std::vector<Matrix> yv = values_of(y0);
  const std::vector<Matrix> fv = values_of(f0);
  const double d0 = rms_scaled(yv, y0, nullptr, cfg.atol, cfg.rtol);
  const double d1 = rms_scaled(fv, y0, nullptr, cfg.atol, cfg.rtol);
  const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;

  OdeState probe;
  for (std::size_t s = 0; s < y0.size(); ++s)
    probe.emplace_back(yv[s] + h0 * fv[s]);
  const OdeState f1 = checked_eval(field, probe, stats);
  std::vector<Matrix> df;
  for (std::size_t s = 0; s < y0.size(); ++s) df.push_back(f1[s].value() - fv[s]);
  const double d2 = rms_scaled(df, y0, nullptr, cfg.atol, cfg.rtol) / h0;

  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, cfg.time});
}

IntegrationResult integrate_fixed(const OdeState& y0, const VectorField& field,
                                  const SolverConfig& cfg, TraceRecorder& trace) {
  IntegrationResult res;
  const std::size_t steps = cfg.fixed_step_count();
  const double h = cfg.step_size;
  OdeState y = y0;
  for (std::size_t k = 0; k < steps; ++k) {
    if (cfg.method == SolverMethod::Euler) {
      const OdeState k1 = checked_eval(field, y, res.stats);
      y = combine(y, {{h, &k1}});
    } else {
      const OdeState k1 = checked_eval(field, y, res.stats);
      const OdeState k2 = checked_eval(field, combine(y, {{0.5 * h, &k1}}), res.stats);
      const OdeState k3 = checked_eval(field, combine(y, {{0.5 * h, &k2}}), res.stats);
      const OdeState k4 = checked_eval(field, combine(y, {{h, &k3}}), res.stats);
      y = combine(y, {{h / 6.0, &k1}, {h / 3.0, &k2}, {h / 3.0, &k3}, {h / 6.0, &k4}});
    }
    ++res.stats.accepted_steps;
    trace.record(static_cast<double>(k + 1) * h, y);
  }
  res.state = std::move(y);
  return res;
}

IntegrationResult integrate_dopri5(const OdeState& y0, const VectorField& field,
                                   const SolverConfig& cfg, TraceRecorder& trace) {
  IntegrationResult res;
  auto& stats = res.stats;
  const double t_end = cfg.time;
  OdeState y = y0;
  OdeState k1 = checked_eval(field, y, stats);
  double h = initial_step(field, y, k1, cfg, stats);
  double t = 0.0;
  std::size_t attempts = 0;

  while (t < t_end) {
    if (attempts++ >= cfg.max_steps) {
      throw IntegrationError("dopri5: exceeded max_steps=" + std::to_string(cfg.max_steps) +
                                 " at t=" + std::to_string(t),
                             t);
    }
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;
    if (h <= 1e-14 * std::max(1.0, std::abs(t))) {
      throw IntegrationError("dopri5: step size underflow at t=" + std::to_string(t), t);
    }

    const OdeState k2 = checked_eval(field, combine(y, {{h * a21, &k1}}), stats);
    const OdeState k3 = checked_eval(field, combine(y, {{h * a31, &k1}, {h * a32, &k2}}), stats);
    const OdeState k4 = checked_eval(
        field, combine(y, {{h * a41, &k1}, {h * a42, &k2}, {h * a43, &k3}}), stats);
    const OdeState k5 = checked_eval(
        field, combine(y, {{h * a51, &k1}, {h * a52, &k2}, {h * a53, &k3}, {h * a54, &k4}}),
        stats);
    const OdeState k6 = checked_eval(
        field,
        combine(y, {{h * a61, &k1}, {h * a62, &k2}, {h * a63, &k3}, {h * a64, &k4}, {h * a65, &k5}}),
        stats);
    OdeState y_new = combine(
        y, {{h * b1, &k1}, {h * b3, &k3}, {h * b4, &k4}, {h * b5, &k5}, {h * b6, &k6}});
    OdeState k7 = checked_eval(field, y_new, stats);

    // Local error estimate from plain values; control flow is not taped.
    const std::array<const OdeState*, 7> ks = {&k1, &k2, &k3, &k4, &k5, &k6, &k7};
    std::vector<Matrix> err;
    for (std::size_t s = 0; s < y.size(); ++s) {
      Matrix e(y[s].rows(), y[s].cols());
      for (std::size_t j = 0; j < ks.size(); ++j) {
        if (err_w[j] == 0.0) continue;
        const Matrix& kv = (*ks[j])[s].value();
        for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] += h * err_w[j] * kv.data()[i];
      }
      err.push_back(std::move(e));
    }
    const double err_norm = rms_scaled(err, y, &y_new, cfg.atol, cfg.rtol);

    const double factor =
        err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -1.0 / 5.0), 0.2, 5.0);
    if (err_norm <= 1.0) {
      t = last ? t_end : t + h;
      y = std::move(y_new);
      k1 = std::move(k7);
      ++stats.accepted_steps;
      stats.max_accepted_error = std::max(stats.max_accepted_error, err_norm);
      trace.record(t, y);
    } else {
      ++stats.rejected_steps;
    }
    h *= factor;
  }
  res.state = std::move(y);
  return res;
}

}  // namespace

std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::Euler:
      return "euler";
    case SolverMethod::Rk4:
      return "rk4";
    case SolverMethod::Dopri5:
      return "dopri5";
  }
  return "?";
}

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "euler") return SolverMethod::Euler;
  if (name == "rk4") return SolverMethod::Rk4;
  if (name == "dopri5") return SolverMethod::Dopri5;
  throw ConfigError("unknown solver '" + name + "' (expected euler, rk4, dopri5)");
}

void SolverConfig::validate() const {
  if (!(time >= 0.0) || !std::isfinite(time)) throw ConfigError("solver: time must be >= 0");
  if (method == SolverMethod::Dopri5) {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("solver: rtol and atol must be > 0");
    if (max_steps == 0) throw ConfigError("solver: max_steps must be > 0");
  } else {
    if (!(step_size > 0.0)) throw ConfigError("solver: step_size must be > 0");
    (void)fixed_step_count();
  }
}

std::size_t SolverConfig::fixed_step_count() const {
  const double ratio = time / step_size;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("solver: time " + std::to_string(time) + " is not a whole number of steps of " +
                      std::to_string(step_size));
  }
  return static_cast<std::size_t>(steps);
}

IntegrationResult integrate(const OdeState& y0, const VectorField& field, const SolverConfig& cfg,
                            bool record_trace, const EnergyProbe& energy) {
  cfg.validate();
  for (const auto& t : y0) {
    if (!t.value().all_finite()) throw NumericalError("integrate: initial state is not finite");
  }
  TraceRecorder trace(record_trace, energy);
  trace.record(0.0, y0);

  IntegrationResult res;
  if (cfg.time == 0.0) {
    res.state = y0;
  } else if (cfg.method == SolverMethod::Dopri5) {
    res = integrate_dopri5(y0, field, cfg, trace);
  } else {
    res = integrate_fixed(y0, field, cfg, trace);
  }
  res.trajectory = trace.take();
  return res;
}

bool unroll_equivalence_check(const OdeState& y0, const VectorField& field, std::size_t layers) {
  SolverConfig cfg;
  cfg.method = SolverMethod::Euler;
  cfg.time = static_cast<double>(layers);
  cfg.step_size = 1.0;
  const OdeState solved = integrate(y0, field, cfg).state;

  OdeState manual = y0;
  for (std::size_t l = 0; l < layers; ++l) {
    const OdeState k = field(manual);
    for (std::size_t s = 0; s < manual.size(); ++s) manual[s] = add(manual[s], k[s]);
  }
  for (std::size_t s = 0; s < manual.size(); ++s) {
    if (!(solved[s].value() == manual[s].value())) return false;
  }
  return true;
}

void write_energy_csv(std::ostream& os, const Trajectory& traj) {
  const auto old_prec = os.precision(17);
  os << "t,energy\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << traj.times[i] << ',';
    if (i < traj.energies.size()) os << traj.energies[i];
    os << '\n';
  }
  os.precision(old_prec);
}

void write_snapshot_csv(std::ostream& os, const Trajectory& traj) {
  const auto old_prec = os.precision(17);
  std::size_t width = 0;
  for (const auto& st : traj.states)
    for (const auto& m : st) width = std::max(width, m.cols());
  os << "t,slot,node";
  for (std::size_t j = 0; j < width; ++j) os << ",c" << j;
  os << '\n';
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    for (std::size_t s = 0; s < traj.states[i].size(); ++s) {
      const Matrix& m = traj.states[i][s];
      for (std::size_t r = 0; r < m.rows(); ++r) {
        os << traj.times[i] << ',' << s << ',' << r;
        for (double v : m.row(r)) os << ',' << v;
        os << '\n';
      }
    }
  }
  os.precision(old_prec);
}

}  // namespace hdg
