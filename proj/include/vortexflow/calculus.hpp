#pragma once

#include <cmath>
#include <numbers>

#include "vortexflow/errors.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/fourier.hpp"
#include "vortexflow/geometry.hpp"

namespace vflow {

/// Differentiation rule for periodic real fields.
///
/// Spectral: exact Fourier differentiation (Nyquist dropped for first
/// derivatives). Lattice: forward-difference gradient, backward-difference
/// divergence and the 5-point Laplacian. The lattice pair is the one matched
/// to the link variables of the covariant stencil, so it is what the flow
/// uses to keep the Coulomb condition exact.
enum class Stencil { Spectral, Lattice };

inline double integrate(const RealField& f, const TorusGeometry& geom) {
  CompensatedSum s;
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < f.size(); ++k) s.add(f[k] * w[k]);
  return s.value();
}

inline double l2_norm(const RealField& f, const TorusGeometry& geom) {
  double s = 0.0;
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * f[k] * w[k];
  return std::sqrt(s);
}

inline double l2_norm(const ComplexField& f, const TorusGeometry& geom) {
  double s = 0.0;
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < f.size(); ++k) s += std::norm(f[k]) * w[k];
  return std::sqrt(s);
}

/// L2 norm of a 1-form: sum (A1^2 + A2^2) h1 h2, the e^{-2rho} e^{2rho} weights cancel.
inline double l2_norm(const OneForm& A, const TorusGeometry& geom) {
  double s = 0.0;
  for (std::size_t k = 0; k < A.a1.size(); ++k) s += A.a1[k] * A.a1[k] + A.a2[k] * A.a2[k];
  return std::sqrt(s * geom.cell());
}

inline double inner(const OneForm& A, const OneForm& B, const TorusGeometry& geom) {
  double s = 0.0;
  for (std::size_t k = 0; k < A.a1.size(); ++k) s += A.a1[k] * B.a1[k] + A.a2[k] * B.a2[k];
  return s * geom.cell();
}

inline double inner(const RealField& f, const RealField& g, const TorusGeometry& geom) {
  double s = 0.0;
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k] * w[k];
  return s;
}

/// Real inner product sum Re(conj(f) g) e^{2 rho} h1 h2.
inline double inner(const ComplexField& f, const ComplexField& g, const TorusGeometry& geom) {
  double s = 0.0;
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < f.size(); ++k) s += (std::conj(f[k]) * g[k]).real() * w[k];
  return s;
}

namespace detail {

inline void require_shape(const TorusGeometry& geom, const RealField& f) {
  if (!geom.matches(f)) throw ConfigError("field shape does not match geometry");
}

inline double wavenumber1(const TorusGeometry& g, int m) {
  return 2.0 * std::numbers::pi * m / g.L1();
}
inline double wavenumber2(const TorusGeometry& g, const Fourier2D& ft, int q) {
  return 2.0 * std::numbers::pi * ft.signed_q(q) / g.L2();
}

/// Eigenvalue of -Delta_flat for mode (m, q) under the chosen stencil.
inline double laplacian_symbol(const TorusGeometry& g, const Fourier2D& ft, int m, int q,
                               Stencil st) {
  const double k1 = wavenumber1(g, m);
  const double k2 = wavenumber2(g, ft, q);
  if (st == Stencil::Spectral) return k1 * k1 + k2 * k2;
  const double s1 = 2.0 * std::sin(0.5 * k1 * g.h1()) / g.h1();
  const double s2 = 2.0 * std::sin(0.5 * k2 * g.h2()) / g.h2();
  return s1 * s1 + s2 * s2;
}

/// Spectral partial derivative of a periodic field along direction dir (1 or 2).
inline RealField spectral_partial(const RealField& f, const TorusGeometry& geom, int dir) {
  Fourier2D ft(geom.n1(), geom.n2());
  ft.forward(f);
  ft.for_each_mode([&](int m, int q, complex& c) {
    if (dir == 1) {
      c *= ft.is_nyquist1(m) ? 0.0 : complex(0.0, wavenumber1(geom, m));
    } else {
      c *= ft.is_nyquist2(q) ? 0.0 : complex(0.0, wavenumber2(geom, ft, q));
    }
  });
  RealField out(geom.n1(), geom.n2());
  ft.backward(out);
  return out;
}

inline RealField forward_diff(const RealField& f, const TorusGeometry& geom, int dir) {
  const int n1 = geom.n1(), n2 = geom.n2();
  RealField out(n1, n2);
  const double inv = 1.0 / (dir == 1 ? geom.h1() : geom.h2());
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const double next = dir == 1 ? f(wrap_index(i + 1, n1), j) : f(i, wrap_index(j + 1, n2));
      out(i, j) = (next - f(i, j)) * inv;
    }
  return out;
}

inline RealField backward_diff(const RealField& f, const TorusGeometry& geom, int dir) {
  const int n1 = geom.n1(), n2 = geom.n2();
  RealField out(n1, n2);
  const double inv = 1.0 / (dir == 1 ? geom.h1() : geom.h2());
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const double prev = dir == 1 ? f(wrap_index(i - 1, n1), j) : f(i, wrap_index(j - 1, n2));
      out(i, j) = (f(i, j) - prev) * inv;
    }
  return out;
}

inline void scale_by_inverse_metric(RealField& f, const TorusGeometry& geom) {
  if (geom.conformally_flat_constant() && geom.rho()[0] == 0.0) return;
  const auto& rho = geom.rho();
  for (std::size_t k = 0; k < f.size(); ++k) f[k] *= std::exp(-2.0 * rho[k]);
}

}  // namespace detail

/// Flat divergence d1 A1 + d2 A2 (no metric factor).
inline RealField div_flat(const OneForm& A, const TorusGeometry& geom,
                          Stencil st = Stencil::Spectral) {
  detail::require_shape(geom, A.a1);
  RealField out = st == Stencil::Spectral ? detail::spectral_partial(A.a1, geom, 1)
                                          : detail::backward_diff(A.a1, geom, 1);
  out += st == Stencil::Spectral ? detail::spectral_partial(A.a2, geom, 2)
                                 : detail::backward_diff(A.a2, geom, 2);
  return out;
}

/// div A = e^{-2 rho}(d1 A1 + d2 A2).
inline RealField div(const OneForm& A, const TorusGeometry& geom, Stencil st = Stencil::Spectral) {
  RealField out = div_flat(A, geom, st);
  detail::scale_by_inverse_metric(out, geom);
  return out;
}

/// *dA = e^{-2 rho}(d1 A2 - d2 A1). The lattice version is the plaquette
/// circulation of forward differences, stored at the plaquette's lower-left site.
inline RealField curl(const OneForm& A, const TorusGeometry& geom, Stencil st = Stencil::Spectral) {
  detail::require_shape(geom, A.a1);
  RealField out = st == Stencil::Spectral ? detail::spectral_partial(A.a2, geom, 1)
                                          : detail::forward_diff(A.a2, geom, 1);
  out -= st == Stencil::Spectral ? detail::spectral_partial(A.a1, geom, 2)
                                 : detail::forward_diff(A.a1, geom, 2);
  detail::scale_by_inverse_metric(out, geom);
  return out;
}

/// ds = (d1 s, d2 s); forward differences under the lattice stencil.
inline OneForm grad(const RealField& s, const TorusGeometry& geom, Stencil st = Stencil::Spectral) {
  detail::require_shape(geom, s);
  if (st == Stencil::Spectral)
    return {detail::spectral_partial(s, geom, 1), detail::spectral_partial(s, geom, 2)};
  return {detail::forward_diff(s, geom, 1), detail::forward_diff(s, geom, 2)};
}

/// Laplace-Beltrami operator e^{-2 rho} Delta_flat.
inline RealField laplacian(const RealField& u, const TorusGeometry& geom,
                           Stencil st = Stencil::Spectral) {
  detail::require_shape(geom, u);
  RealField out(geom.n1(), geom.n2());
  if (st == Stencil::Spectral) {
    Fourier2D ft(geom.n1(), geom.n2());
    ft.forward(u);
    ft.for_each_mode([&](int m, int q, complex& c) {
      c *= -detail::laplacian_symbol(geom, ft, m, q, st);
    });
    ft.backward(out);
  } else {
    out = div_flat(grad(u, geom, st), geom, st);
  }
  detail::scale_by_inverse_metric(out, geom);
  return out;
}

/// Solves Delta_flat u = rhs on the torus with mean-zero (flat) u, reusing a
/// caller-owned transform. rhs must have zero flat mean up to roundoff; the
/// zero mode is discarded.
inline void solve_flat_poisson(const RealField& rhs, const TorusGeometry& geom, Stencil st,
                               Fourier2D& ft, RealField& u) {
  ft.forward(rhs);
  ft.for_each_mode([&](int m, int q, complex& c) {
    const double lam = detail::laplacian_symbol(geom, ft, m, q, st);
    c = (m == 0 && q == 0) || lam == 0.0 ? complex(0.0) : -c / lam;
  });
  ft.backward(u);
}

/// Solves Delta u = f (Laplace-Beltrami), i.e. Delta_flat u = e^{2 rho} f.
///
/// Requires |int f dmu| <= 1e-8 |Sigma|^{1/2} ||f||_{L2}; the returned u has
/// zero flat mean.
inline RealField poisson_solve(const RealField& f, const TorusGeometry& geom,
                               Stencil st = Stencil::Spectral) {
  detail::require_shape(geom, f);
  const double mean = integrate(f, geom);
  const double scale = l2_norm(f, geom) * std::sqrt(geom.area());
  if (std::abs(mean) > 1e-8 * scale)
    throw SolvabilityError("Poisson source has nonzero integral; the torus Laplacian "
                           "is only invertible on mean-zero data");
  RealField rhs(geom.n1(), geom.n2());
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = f[k] * w[k] / geom.cell();
  RealField u(geom.n1(), geom.n2());
  Fourier2D ft(geom.n1(), geom.n2());
  solve_flat_poisson(rhs, geom, st, ft, u);
  return u;
}

/// Removes the exact (non-harmonic) gradient part: A - d(Delta^{-1} div A).
/// Curl and the mean of each component are preserved.
inline OneForm coulomb_project(const OneForm& A, const TorusGeometry& geom,
                               Stencil st = Stencil::Spectral) {
  const RealField d = div_flat(A, geom, st);
  RealField chi(geom.n1(), geom.n2());
  Fourier2D ft(geom.n1(), geom.n2());
  if (st == Stencil::Spectral) {
    // Invert div o grad itself: the spectral derivative drops Nyquist modes,
    // so there the symbol differs from |k|^2.
    ft.forward(d);
    ft.for_each_mode([&](int m, int q, complex& c) {
      const double k1 = ft.is_nyquist1(m) ? 0.0 : detail::wavenumber1(geom, m);
      const double k2 = ft.is_nyquist2(q) ? 0.0 : detail::wavenumber2(geom, ft, q);
      const double lam = k1 * k1 + k2 * k2;
      c = lam == 0.0 ? complex(0.0) : -c / lam;
    });
    ft.backward(chi);
  } else {
    solve_flat_poisson(d, geom, st, ft, chi);
  }
  OneForm out = A;
  out -= grad(chi, geom, st);
  return out;
}

/// Mean of each component: the harmonic part of a 1-form on the flat torus.
inline std::pair<double, double> harmonic_part(const OneForm& A) {
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < A.a1.size(); ++k) {
    s1 += A.a1[k];
    s2 += A.a2[k];
  }
  const double n = static_cast<double>(A.a1.size());
  return {s1 / n, s2 / n};
}

}  // namespace vflow
