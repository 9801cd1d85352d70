#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "vortexflow/bundle.hpp"
#include "vortexflow/calculus.hpp"
#include "vortexflow/energy.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/fourier.hpp"
#include "vortexflow/geometry.hpp"

namespace vflow {

enum class Scheme { ForwardEuler, RK4 };

inline const char* to_string(Scheme s) { return s == Scheme::ForwardEuler ? "euler" : "rk4"; }

struct StepPolicy {
  Scheme scheme = Scheme::ForwardEuler;
  std::optional<double> dt;  // empty: automatic
  double safety = 0.8;
  double t_max = 100.0;
  double grad_tol = 1e-8;
  int record_every = 100;
  EnergyForm energy = EnergyForm::Bogomolny;
};

/// Largest eigenvalue of the flat principal part of the energy Hessian.
inline double principal_spectral_radius(const TorusGeometry& geom, EnergyForm form) {
  const double a = 1.0 / geom.h1(), c = 1.0 / geom.h2();
  if (form == EnergyForm::Direct) return 4.0 * (a * a + c * c);
  // |(e^{ia}-1)/h1 + i(e^{ib}-1)/h2|^2 peaks at (|1/h1 + i/h2| + 1/h1 + 1/h2)^2.
  const double r = std::sqrt(a * a + c * c) + a + c;
  return r * r;
}

/// Forward Euler stability limit 2 / lambda_max, scaled by the smallest e^{2 rho}.
inline double euler_stability_limit(const TorusGeometry& geom, EnergyForm form) {
  const double min_rho = *std::min_element(geom.rho().begin(), geom.rho().end());
  return 2.0 / principal_spectral_radius(geom, form) * std::exp(2.0 * min_rho);
}

inline double resolve_dt(const StepPolicy& policy, const TorusGeometry& geom) {
  if (policy.dt) return *policy.dt;
  return policy.safety * euler_stability_limit(geom, policy.energy);
}

using Velocity = Gradient;

/// Gauge-fixed gradient flow in Coulomb gauge:
///
///   dA/dt   = -G_A   + d A0
///   dPhi/dt = -G_Phi + i A0 Phi
///
/// where G is the exact gradient of the discrete energy and A0 solves
/// Delta_h A0 = div_h G_A with int A0 dmu = 0. With the lattice pair
/// (forward d, backward div) this keeps div_h A constant to roundoff.
/// The magnetic part of G_A is divergence-free, so the source is -div J for
/// the Higgs current J of the energy.
class FlowEngine {
 public:
  FlowEngine(const TorusGeometry& geom, const BundleConnection& bundle, EnergyForm form,
             bool gauge_terms = true)
      : geom_(&geom), bundle_(&bundle), energy_(geom, bundle, form), gauge_terms_(gauge_terms),
        ft_(geom.n1(), geom.n2()), grad_(geom.n1(), geom.n2()), src_(geom.n1(), geom.n2()),
        a0_(geom.n1(), geom.n2()) {}

  const TorusGeometry& geometry() const { return *geom_; }
  const BundleConnection& bundle() const { return *bundle_; }
  DiscreteEnergy& energy() { return energy_; }
  const Gradient& last_gradient() const { return grad_; }
  /// A0 from the most recent velocity() call.
  const RealField& a0() const { return a0_; }

  /// Energies, gradient and A0 at (A, Phi); fills vel when non-null.
  EnergyEvaluation velocity(const OneForm& A, const ComplexField& phi, Velocity* vel) {
    const EnergyEvaluation e = energy_.evaluate(A, phi, &grad_);
    solve_a0_from_gradient();
    if (vel) assemble_velocity(phi, *vel);
    return e;
  }

  /// sup |div A| under the lattice divergence, with the e^{-2 rho} factor.
  double coulomb_residual(const OneForm& A) const {
    const int n1 = geom_->n1(), n2 = geom_->n2();
    const double i1 = 1.0 / geom_->h1(), i2 = 1.0 / geom_->h2();
    const auto& rho = geom_->rho();
    double m = 0.0;
    for (int j = 0; j < n2; ++j) {
      const int jm = j == 0 ? n2 - 1 : j - 1;
      for (int i = 0; i < n1; ++i) {
        const int im = i == 0 ? n1 - 1 : i - 1;
        const double d = (A.a1(i, j) - A.a1(im, j)) * i1 + (A.a2(i, j) - A.a2(i, jm)) * i2;
        m = std::max(m, std::abs(d) * std::exp(-2.0 * rho(i, j)));
      }
    }
    return m;
  }

  /// Restores div_h A = 0 by the gauge transformation chi = -Delta_h^{-1} div_h A.
  void repair_gauge(OneForm& A, ComplexField& phi) {
    const RealField d = div_flat(A, *geom_, Stencil::Lattice);
    RealField chi(geom_->n1(), geom_->n2());
    solve_flat_poisson(d, *geom_, Stencil::Lattice, ft_, chi);
    const OneForm dchi = grad(chi, *geom_, Stencil::Lattice);
    A -= dchi;
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] *= std::polar(1.0, -chi[k]);
  }

 private:
  void solve_a0_from_gradient() {
    if (!gauge_terms_) {
      std::fill(a0_.begin(), a0_.end(), 0.0);
      return;
    }
    const int n1 = geom_->n1(), n2 = geom_->n2();
    const double i1 = 1.0 / geom_->h1(), i2 = 1.0 / geom_->h2();
    const auto& g1 = grad_.A.a1;
    const auto& g2 = grad_.A.a2;
    for (int j = 0; j < n2; ++j) {
      const int jm = j == 0 ? n2 - 1 : j - 1;
      for (int i = 0; i < n1; ++i) {
        const int im = i == 0 ? n1 - 1 : i - 1;
        src_(i, j) = (g1(i, j) - g1(im, j)) * i1 + (g2(i, j) - g2(i, jm)) * i2;
      }
    }
    solve_flat_poisson(src_, *geom_, Stencil::Lattice, ft_, a0_);
    if (!geom_->conformally_flat_constant()) {
      const double shift = integrate(a0_, *geom_) / geom_->area();
      for (auto& x : a0_) x -= shift;
    }
  }

  void assemble_velocity(const ComplexField& phi, Velocity& vel) const {
    const int n1 = geom_->n1(), n2 = geom_->n2();
    const double i1 = 1.0 / geom_->h1(), i2 = 1.0 / geom_->h2();
    for (int j = 0; j < n2; ++j) {
      const int jp = j + 1 == n2 ? 0 : j + 1;
      for (int i = 0; i < n1; ++i) {
        const int ip = i + 1 == n1 ? 0 : i + 1;
        const std::size_t k = phi.index(i, j);
        const double a = a0_[k];
        vel.A.a1[k] = -grad_.A.a1[k] + (a0_(ip, j) - a) * i1;
        vel.A.a2[k] = -grad_.A.a2[k] + (a0_(i, jp) - a) * i2;
        vel.phi[k] = -grad_.phi[k] + complex(-a * phi[k].imag(), a * phi[k].real());
      }
    }
  }

  const TorusGeometry* geom_;
  const BundleConnection* bundle_;
  DiscreteEnergy energy_;
  bool gauge_terms_;
  Fourier2D ft_;
  Gradient grad_;
  RealField src_;
  RealField a0_;
};

/// A0 for the given state: -Delta A0 = div J with int A0 dmu = 0.
inline RealField solve_a0(const FlowState& state, const TorusGeometry& geom,
                          const BundleConnection& bundle,
                          EnergyForm form = EnergyForm::Bogomolny) {
  FlowEngine engine(geom, bundle, form);
  engine.velocity(state.A, state.phi, nullptr);
  return engine.a0();
}

inline Gradient energy_gradient(const FlowState& state, const TorusGeometry& geom,
                                const BundleConnection& bundle,
                                EnergyForm form = EnergyForm::Bogomolny) {
  DiscreteEnergy e(geom, bundle, form);
  return e.gradient(state.A, state.phi);
}

/// L2 norm of the energy gradient with the flow's inner products.
inline double grad_norm(const Gradient& g, const TorusGeometry& geom) {
  const double a = l2_norm(g.A, geom);
  const double p = l2_norm(g.phi, geom);
  return std::sqrt(a * a + p * p);
}

inline double grad_norm(const FlowState& state, const TorusGeometry& geom,
                        const BundleConnection& bundle, EnergyForm form = EnergyForm::Bogomolny) {
  return grad_norm(energy_gradient(state, geom, bundle, form), geom);
}

namespace detail {

inline void axpy(double s, const Velocity& v, OneForm& A, ComplexField& phi) {
  for (std::size_t k = 0; k < phi.size(); ++k) {
    A.a1[k] += s * v.A.a1[k];
    A.a2[k] += s * v.A.a2[k];
    phi[k] += s * v.phi[k];
  }
}

}  // namespace detail

/// Advances (A, Phi) by one step. Returns the evaluation at the start state.
class Stepper {
 public:
  Stepper(FlowEngine& engine) : engine_(&engine) {
    const int n1 = engine.geometry().n1(), n2 = engine.geometry().n2();
    k1_ = Velocity(n1, n2);
  }

  EnergyEvaluation step(FlowState& s, Scheme scheme, double dt) {
    EnergyEvaluation e = engine_->velocity(s.A, s.phi, &k1_);
    advance(s, scheme, dt);
    return e;
  }

  /// Completes a step whose first-stage velocity() was already evaluated at s.
  void advance(FlowState& s, Scheme scheme, double dt) {
    if (scheme == Scheme::ForwardEuler) {
      detail::axpy(dt, k1_, s.A, s.phi);
    } else {
      rk4_rest(s, dt);
    }
    s.t += dt;
  }

  Velocity& first_stage() { return k1_; }

 private:
  void rk4_rest(FlowState& s, double dt) {
    const int n1 = s.phi.n1(), n2 = s.phi.n2();
    if (k2_.phi.size() != s.phi.size()) {
      k2_ = Velocity(n1, n2);
      k3_ = Velocity(n1, n2);
      k4_ = Velocity(n1, n2);
    }
    OneForm A = s.A;
    ComplexField phi = s.phi;
    detail::axpy(0.5 * dt, k1_, A, phi);
    engine_->velocity(A, phi, &k2_);
    A = s.A;
    phi = s.phi;
    detail::axpy(0.5 * dt, k2_, A, phi);
    engine_->velocity(A, phi, &k3_);
    A = s.A;
    phi = s.phi;
    detail::axpy(dt, k3_, A, phi);
    engine_->velocity(A, phi, &k4_);
    for (std::size_t k = 0; k < s.phi.size(); ++k) {
      s.A.a1[k] += dt / 6.0 * (k1_.A.a1[k] + 2.0 * k2_.A.a1[k] + 2.0 * k3_.A.a1[k] + k4_.A.a1[k]);
      s.A.a2[k] += dt / 6.0 * (k1_.A.a2[k] + 2.0 * k2_.A.a2[k] + 2.0 * k3_.A.a2[k] + k4_.A.a2[k]);
      s.phi[k] += dt / 6.0 * (k1_.phi[k] + 2.0 * k2_.phi[k] + 2.0 * k3_.phi[k] + k4_.phi[k]);
    }
  }

  FlowEngine* engine_;
  Velocity k1_, k2_, k3_, k4_;
};

/// Single step from a state; convenience wrapper.
inline FlowState step(const FlowState& state, const StepPolicy& policy, const TorusGeometry& geom,
                      const BundleConnection& bundle) {
  FlowEngine engine(geom, bundle, policy.energy);
  Stepper stepper(engine);
  FlowState next = state;
  stepper.step(next, policy.scheme, resolve_dt(policy, geom));
  if (engine.coulomb_residual(next.A) > 1e-8) engine.repair_gauge(next.A, next.phi);
  if (!all_finite(next.phi) || !all_finite(next.A.a1) || !all_finite(next.A.a2))
    throw BlowUpError("non-finite field after step", 0);
  next.a0.reset();
  return next;
}

}  // namespace vflow
