#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "vortexflow/bundle.hpp"
#include "vortexflow/calculus.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/geometry.hpp"
#include "vortexflow/trig.hpp"

namespace vflow {

/// Parallel transports W_j(x) taking the stored value of the forward
/// neighbour x + e_j into the fibre at x. Away from the x^1 seam W_j = U_j;
/// across it W_1 = U_1 T(x^2).
struct Links {
  ComplexField w1;
  ComplexField w2;
};

inline Links make_links(const BundleConnection& bundle, const OneForm& A) {
  const int n1 = bundle.n1(), n2 = bundle.n2();
  Links L{ComplexField(n1, n2), ComplexField(n1, n2)};
  const double h1 = bundle.h1(), h2 = bundle.h2();
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      L.w1(i, j) = std::polar(1.0, -bundle.background_phi1(i, j)) * expmi(h1 * A.a1(i, j));
      L.w2(i, j) = std::polar(1.0, -bundle.background_phi2(i, j)) * expmi(h2 * A.a2(i, j));
    }
  return L;
}

/// Stored value of the forward neighbour carried back to (i, j).
inline complex transported_next1(const ComplexField& f, const Links& L, int i, int j) {
  return L.w1(i, j) * f(i + 1 == f.n1() ? 0 : i + 1, j);
}
inline complex transported_next2(const ComplexField& f, const Links& L, int i, int j) {
  return L.w2(i, j) * f(i, j + 1 == f.n2() ? 0 : j + 1);
}
/// Stored value of the backward neighbour carried forward to (i, j).
inline complex transported_prev1(const ComplexField& f, const Links& L, int i, int j) {
  const int p = i == 0 ? f.n1() - 1 : i - 1;
  return std::conj(L.w1(p, j)) * f(p, j);
}
inline complex transported_prev2(const ComplexField& f, const Links& L, int i, int j) {
  const int p = j == 0 ? f.n2() - 1 : j - 1;
  return std::conj(L.w2(i, p)) * f(i, p);
}

/// Plaquette angles theta(i, j) = phi1(x) + phi2(x+e1) - phi1(x+e2) - phi2(x).
///
/// The background contributes exactly the uniform angle 2 pi N / (n1 n2) to
/// every plaquette (seam included), so theta is assembled as that constant
/// plus the circulation of h_j A_j; this keeps the summed flux at 2 pi N to
/// roundoff. Throws ResolutionError when an angle leaves (-pi, pi).
inline RealField plaquette_angles(const BundleConnection& bundle, const OneForm& A) {
  const int n1 = bundle.n1(), n2 = bundle.n2();
  const double h1 = bundle.h1(), h2 = bundle.h2();
  const double base = bundle.plaquette_phase();
  RealField theta(n1, n2);
  for (int j = 0; j < n2; ++j) {
    const int jp = j + 1 == n2 ? 0 : j + 1;
    for (int i = 0; i < n1; ++i) {
      const int ip = i + 1 == n1 ? 0 : i + 1;
      const double t = base + h1 * (A.a1(i, j) - A.a1(i, jp)) + h2 * (A.a2(ip, j) - A.a2(i, j));
      if (!(std::abs(t) < std::numbers::pi))
        throw ResolutionError("plaquette phase outside the principal branch; the gauge "
                              "field is too rough for the grid");
      theta(i, j) = t;
    }
  }
  return theta;
}

/// B = theta / (h1 h2 e^{2 rho}), stored at the plaquette's lower-left site.
inline RealField magnetic_field(const OneForm& A, const BundleConnection& bundle,
                                const TorusGeometry& geom) {
  RealField B = plaquette_angles(bundle, A);
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < B.size(); ++k) B[k] /= w[k];
  return B;
}

/// Total flux, sum of B e^{2 rho} h1 h2.
inline double flux(const RealField& B, const TorusGeometry& geom) { return integrate(B, geom); }

/// Forward covariant differences (D1 Phi, D2 Phi).
inline std::pair<ComplexField, ComplexField> covariant_derivative(const ComplexField& phi,
                                                                  const Links& L,
                                                                  const BundleConnection& bundle) {
  const int n1 = phi.n1(), n2 = phi.n2();
  ComplexField d1(n1, n2), d2(n1, n2);
  const double i1 = 1.0 / bundle.h1(), i2 = 1.0 / bundle.h2();
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      d1(i, j) = (transported_next1(phi, L, i, j) - phi(i, j)) * i1;
      d2(i, j) = (transported_next2(phi, L, i, j) - phi(i, j)) * i2;
    }
  return {std::move(d1), std::move(d2)};
}

inline std::pair<ComplexField, ComplexField> covariant_derivative(const ComplexField& phi,
                                                                  const OneForm& A,
                                                                  const BundleConnection& bundle) {
  return covariant_derivative(phi, make_links(bundle, A), bundle);
}

/// dbar_A Phi = (D1 + i D2) Phi / 2.
inline ComplexField dbar(const ComplexField& phi, const Links& L, const BundleConnection& bundle) {
  auto [d1, d2] = covariant_derivative(phi, L, bundle);
  for (std::size_t k = 0; k < d1.size(); ++k) d1[k] = 0.5 * (d1[k] + complex(0.0, 1.0) * d2[k]);
  return d1;
}

inline ComplexField dbar(const ComplexField& phi, const OneForm& A,
                         const BundleConnection& bundle) {
  return dbar(phi, make_links(bundle, A), bundle);
}

/// Flat lattice covariant Laplacian sum_j (W Phi(x+e_j) + W* Phi(x-e_j) - 2 Phi) / h_j^2.
inline void covariant_laplacian_flat(const ComplexField& phi, const Links& L,
                                     const BundleConnection& bundle, ComplexField& out) {
  const int n1 = phi.n1(), n2 = phi.n2();
  const double i1 = 1.0 / (bundle.h1() * bundle.h1());
  const double i2 = 1.0 / (bundle.h2() * bundle.h2());
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const complex c = phi(i, j);
      out(i, j) = (transported_next1(phi, L, i, j) + transported_prev1(phi, L, i, j) - 2.0 * c) * i1 +
                  (transported_next2(phi, L, i, j) + transported_prev2(phi, L, i, j) - 2.0 * c) * i2;
    }
}

}  // namespace vflow
