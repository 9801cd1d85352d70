#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "vortexflow/bundle.hpp"
#include "vortexflow/calculus.hpp"
#include "vortexflow/covariant.hpp"
#include "vortexflow/diagnostics.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/fourier.hpp"
#include "vortexflow/random.hpp"
#include "vortexflow/run.hpp"

namespace vflow {

/// Complex Gaussian noise smoothed by tau steps of Phi += dt_s Delta_A Phi with
/// A = 0 and dt_s = 0.2 min(h1, h2)^2. Covariant, hence twist-compatible.
inline ComplexField random_section(const BundleConnection& bundle, const TorusGeometry& geom,
                                   std::uint64_t seed, int tau) {
  if (tau < 0) throw ConfigError("init.smoothing must be >= 0");
  const int n1 = geom.n1(), n2 = geom.n2();
  ComplexField phi(n1, n2);
  Rng rng(seed);
  for (auto& p : phi) {
    const double re = rng.normal();
    p = complex(re, rng.normal());
  }
  if (tau == 0) return phi;
  const Links L = make_links(bundle, OneForm(n1, n2));
  const double h = std::min(geom.h1(), geom.h2());
  const double dts = 0.2 * h * h;
  ComplexField lap(n1, n2);
  for (int s = 0; s < tau; ++s) {
    covariant_laplacian_flat(phi, L, bundle, lap);
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += dts * lap[k];
  }
  return phi;
}

/// Band-limited (|k| <= 4 per direction) random periodic 1-form, projected to
/// lattice Coulomb gauge with zero harmonic part and scaled to RMS amplitude,
/// i.e. ||A||_{L2} = amplitude * sqrt(|Sigma|). The random modes do not depend
/// on the resolution, so refinements sample the same continuum form.
inline OneForm random_divfree_oneform(const TorusGeometry& geom, std::uint64_t seed,
                                      double amplitude) {
  if (!(amplitude >= 0.0)) throw ConfigError("init.a_amplitude must be >= 0");
  const int n1 = geom.n1(), n2 = geom.n2();
  OneForm A(n1, n2);
  if (amplitude == 0.0) return A;
  constexpr int K = 4;
  Rng rng(seed);
  Fourier2D ft(n1, n2);
  for (int c = 0; c < 2; ++c) {
    ft.for_each_mode([](int, int, complex& z) { z = 0.0; });
    for (int q = -K; q <= K; ++q)
      for (int m = 0; m <= K; ++m) {
        const double re = rng.normal();
        const double im = rng.normal();
        if (m == 0 && q == 0) continue;
        if (m >= ft.m1() || ft.is_nyquist1(m) || std::abs(q) >= (n2 + 1) / 2) continue;
        ft.mode(m, q < 0 ? q + n2 : q) = complex(re, im);
      }
    ft.backward(c == 0 ? A.a1 : A.a2);
  }
  A = coulomb_project(A, geom, Stencil::Lattice);
  const double rms = l2_norm(A, geom) / std::sqrt(geom.area());
  if (rms > 0.0) A *= amplitude / rms;
  return A;
}

/// Smooth degree-N section sum_m g(x1 - m L1/N - shift) e^{2 pi i m x2 / L2}
/// with a Gaussian g of width sigma; satisfies the seam twist exactly.
/// Returns the constant 1 for N = 0.
inline ComplexField theta_section(const BundleConnection& bundle, const TorusGeometry& geom,
                                  double sigma, double shift = 0.0) {
  const int n1 = geom.n1(), n2 = geom.n2(), N = bundle.degree();
  ComplexField phi(n1, n2);
  if (N == 0) {
    for (auto& p : phi) p = 1.0;
    return phi;
  }
  const double L1 = geom.L1(), L2 = geom.L2();
  const double period = L1 / N;
  const int reach = static_cast<int>(std::ceil(9.0 * sigma / period)) + N + 1;
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const double x1 = geom.x1(i), x2 = geom.x2(j);
      complex s = 0.0;
      for (int m = -reach; m <= reach + N; ++m) {
        const double u = x1 - m * period - shift;
        s += std::exp(-u * u / (2.0 * sigma * sigma)) *
             std::polar(1.0, 2.0 * std::numbers::pi * m * x2 / L2);
      }
      phi(i, j) = s;
    }
  return phi;
}

enum class InitRecipe { Minimizer, PerturbedMinimizer, Random };

inline const char* to_string(InitRecipe r) {
  switch (r) {
    case InitRecipe::Minimizer: return "minimizer";
    case InitRecipe::PerturbedMinimizer: return "perturbed_minimizer";
    case InitRecipe::Random: return "random";
  }
  return "?";
}

struct InitSpec {
  InitRecipe recipe = InitRecipe::PerturbedMinimizer;
  std::uint64_t seed = 1;
  double phi_amplitude = 0.5;  // RMS of the Higgs part
  double a_amplitude = 0.1;    // RMS of the 1-form part
  int smoothing = 20;
  std::optional<double> target_epsilon0;
  double relax_tol = 1e-10;  // gradient tolerance of the supercritical minimizer relaxation
  double relax_t_max = 1e4;
};

struct InitResult {
  FlowState state;
  double scale = 1.0;  // bisected amplitude factor
  int bisection_iterations = 0;
  double energy_gap = 0.0;  // V - v_min
};

namespace detail {

inline ComplexField unit_rms(ComplexField f, const TorusGeometry& geom) {
  const double rms = l2_norm(f, geom) / std::sqrt(geom.area());
  if (rms > 0.0) f *= complex(1.0 / rms);
  return f;
}

}  // namespace detail

/// Known or relaxed minimizer: N = 0 vacuum; (A, Phi) = (0, 0) when
/// |Sigma| <= 4 pi N; otherwise the flow relaxed from a normalized theta section.
inline FlowState minimizer_state(const TorusGeometry& geom, const BundleConnection& bundle,
                                 const InitSpec& spec, const StepPolicy& policy) {
  const int n1 = geom.n1(), n2 = geom.n2(), N = bundle.degree();
  FlowState s(n1, n2);
  if (N == 0) {
    for (auto& p : s.phi) p = 1.0;
    return s;
  }
  if (regime(N, geom).kind != RegimeKind::Supercritical) return s;
  // Holomorphic for the background: the relaxation then only adjusts |Phi| and
  // the exact part of A, and leaves the slow holonomy mode unexcited.
  s.phi = theta_section(bundle, geom, 1.0 / std::sqrt(bundle.b()));
  const double m = sup_norm(s.phi);
  for (auto& p : s.phi) p /= m;
  StepPolicy relax = policy;
  relax.grad_tol = spec.relax_tol;
  relax.t_max = spec.relax_t_max;
  relax.record_every = 1 << 30;
  RunResult r = run(s, relax, geom, bundle);
  r.state.t = 0.0;
  r.state.a0.reset();
  return r.state;
}

inline FlowState perturb(const FlowState& base, const ComplexField& xi, const OneForm& omega,
                         double phi_amp, double a_amp) {
  FlowState s = base;
  for (std::size_t k = 0; k < s.phi.size(); ++k) {
    s.phi[k] += phi_amp * xi[k];
    s.A.a1[k] += a_amp * omega.a1[k];
    s.A.a2[k] += a_amp * omega.a2[k];
  }
  return s;
}

/// Builds the initial state for a recipe. With target_epsilon0 the perturbation
/// is scaled by bisection on its amplitude until V - v_min is within 1e-3
/// relative of the target from below (at most 40 iterations).
inline InitResult make_initial_state(const InitSpec& spec, const TorusGeometry& geom,
                                     const BundleConnection& bundle, const StepPolicy& policy) {
  if (!(spec.phi_amplitude >= 0.0)) throw ConfigError("init.phi_amplitude must be >= 0");
  if (!(spec.a_amplitude >= 0.0)) throw ConfigError("init.a_amplitude must be >= 0");
  if (spec.target_epsilon0) {
    if (!(*spec.target_epsilon0 > 0.0)) throw ConfigError("init.target_epsilon0 must be > 0");
    if (spec.recipe != InitRecipe::PerturbedMinimizer)
      throw ConfigError("init.target_epsilon0 requires init.recipe = perturbed_minimizer");
  }
  const int N = bundle.degree();
  const double vmin = v_min(N, geom);
  InitResult out;
  auto gap = [&](const FlowState& s) { return energy(s, geom, bundle) - vmin; };

  if (spec.recipe == InitRecipe::Minimizer) {
    out.state = minimizer_state(geom, bundle, spec, policy);
    out.energy_gap = gap(out.state);
    return out;
  }
  const ComplexField xi =
      detail::unit_rms(random_section(bundle, geom, mix_seed(spec.seed), spec.smoothing), geom);
  const OneForm omega = random_divfree_oneform(geom, mix_seed(spec.seed + 1), 1.0);
  if (spec.recipe == InitRecipe::Random) {
    out.state = perturb(FlowState(geom.n1(), geom.n2()), xi, omega, spec.phi_amplitude, spec.a_amplitude);
    out.energy_gap = gap(out.state);
    return out;
  }

  const FlowState base = minimizer_state(geom, bundle, spec, policy);
  auto at = [&](double a) { return perturb(base, xi, omega, a * spec.phi_amplitude, a * spec.a_amplitude); };
  out.state = at(1.0);
  out.energy_gap = gap(out.state);
  if (!spec.target_epsilon0 || out.energy_gap <= *spec.target_epsilon0) return out;

  const double eps = *spec.target_epsilon0;
  const double g0 = gap(base);
  if (g0 > eps)
    throw ConfigError("init.target_epsilon0 is below the minimizer's energy gap " + std::to_string(g0));
  double lo = 0.0, hi = 1.0, glo = g0;
  for (int it = 0; it < 40; ++it) {
    ++out.bisection_iterations;
    const double mid = 0.5 * (lo + hi);
    const double g = gap(at(mid));
    if (g <= eps) {
      lo = mid;
      glo = g;
    } else {
      hi = mid;
    }
    if (eps - glo <= 1e-3 * eps) break;
  }
  out.scale = lo;
  out.state = at(lo);
  out.energy_gap = glo;
  return out;
}

}  // namespace vflow
