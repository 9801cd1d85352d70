#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "vortexflow/diagnostics.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/flow.hpp"

namespace vflow {

/// sup |div_h A| above which the run re-imposes Coulomb gauge.
inline constexpr double kCoulombRepairTol = 1e-8;

enum class RunStatus { Converged, MaxTime };

inline const char* to_string(RunStatus s) {
  return s == RunStatus::Converged ? "converged" : "t_max reached";
}

struct RunHooks {
  /// Called with each record as it is appended.
  std::function<void(const DiagnosticsRecord&, const FlowState&, long step)> on_record;
  /// Called with the offending state before a blow-up error propagates.
  std::function<void(const FlowState&, long step)> on_blowup;
  bool quadratic_forms = false;
};

struct RunResult {
  FlowState state;
  std::vector<DiagnosticsRecord> series;
  RunStatus status = RunStatus::MaxTime;
  long steps = 0;
  double dt = 0.0;
  /// Largest single-step increase of the flowed energy (<= 0 when monotone).
  double max_energy_increase = -INFINITY;
  long monotonicity_violations = 0;
};

namespace detail {

inline bool finite_state(const FlowState& s) {
  return all_finite(s.phi) && all_finite(s.A.a1) && all_finite(s.A.a2);
}

inline double flowed(const EnergyEvaluation& e, EnergyForm f) {
  return f == EnergyForm::Bogomolny ? e.bogomolny : e.direct;
}

}  // namespace detail

/// Runs the gauge-fixed flow from init until grad_norm <= grad_tol or t >= t_max.
/// Records every record_every steps plus the final state.
inline RunResult run(const FlowState& init, const StepPolicy& policy, const TorusGeometry& geom,
                     const BundleConnection& bundle, const RunHooks& hooks = {}) {
  if (policy.record_every < 1) throw ConfigError("step.record_every must be >= 1");
  FlowEngine engine(geom, bundle, policy.energy);
  Stepper stepper(engine);
  RunResult res;
  res.state = init;
  res.state.a0.reset();
  res.dt = resolve_dt(policy, geom);
  if (!(res.dt > 0.0)) throw ConfigError("step.dt must be positive");
  FlowState& s = res.state;

  auto blow_up = [&](const char* what) {
    if (hooks.on_blowup) hooks.on_blowup(s, res.steps);
    throw BlowUpError(what, res.steps);
  };
  auto record = [&]() {
    DiagnosticsRecord r = compute_record(engine, s, hooks.quadratic_forms);
    res.series.push_back(r);
    if (hooks.on_record) hooks.on_record(r, s, res.steps);
  };

  if (!detail::finite_state(s)) blow_up("non-finite initial data");
  const double thresh_rel = 1e-10;
  double prev = 0.0;
  bool have_prev = false;
  const double t_end = policy.t_max * (1.0 - 1e-14);
  for (;;) {
    if (res.steps % 64 == 0 || res.steps % policy.record_every == 0) {
      if (engine.coulomb_residual(s.A) > kCoulombRepairTol) engine.repair_gauge(s.A, s.phi);
    }
    EnergyEvaluation e;
    try {
      e = engine.velocity(s.A, s.phi, &stepper.first_stage());
    } catch (const ResolutionError&) {
      if (hooks.on_blowup) hooks.on_blowup(s, res.steps);
      throw;
    }
    const double E = detail::flowed(e, policy.energy);
    if (!std::isfinite(E) || !std::isfinite(e.grad_norm_sq)) blow_up("non-finite energy");
    if (have_prev) {
      const double inc = E - prev;
      res.max_energy_increase = std::max(res.max_energy_increase, inc);
      if (inc > thresh_rel * (1.0 + std::abs(E))) ++res.monotonicity_violations;
    }
    prev = E;
    have_prev = true;

    const bool converged = std::sqrt(e.grad_norm_sq) <= policy.grad_tol;
    const bool out_of_time = s.t >= t_end;
    if (converged || out_of_time) {
      res.status = converged ? RunStatus::Converged : RunStatus::MaxTime;
      s.a0 = engine.a0();
      record();
      return res;
    }
    if (res.steps % policy.record_every == 0) record();
    stepper.advance(s, policy.scheme, std::min(res.dt, policy.t_max - s.t));
    ++res.steps;
  }
}

}  // namespace vflow
