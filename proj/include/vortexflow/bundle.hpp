#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "vortexflow/calculus.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/geometry.hpp"
#include "vortexflow/random.hpp"

namespace vflow {

/// Degree-N line bundle over the torus with a constant-curvature background.
///
/// Background potential a = (0, b x^1); sections obey
///   Phi(x^1 + L1, x^2) = exp(i b L1 x^2) Phi(x^1, x^2),
/// and are strictly periodic in x^2. Link variables are U_j = exp(-i phi_j)
/// with phi_j = h_j (a_j + A_j); the transition phase is folded into the
/// x^1 link that crosses the seam.
class BundleConnection {
 public:
  BundleConnection(int N, const TorusGeometry& geom)
      : N_(N), n1_(geom.n1()), n2_(geom.n2()), L1_(geom.L1()), L2_(geom.L2()),
        h1_(geom.h1()), h2_(geom.h2()) {
    require_nonnegative_degree(N);
    if (N > 0 && !geom.conformally_flat_constant())
      throw UnsupportedConfiguration(
          "a constant-curvature background for N > 0 is only constructed for constant rho");
    b_ = background_field_strength(N, geom);
    // b * area == 2 pi N by construction; the plaquette phase b h1 h2 e^{2rho}
    // then sums to exactly 2 pi N over the grid.
    plaquette_phase_ = 2.0 * std::numbers::pi * N / (static_cast<double>(n1_) * n2_);
    seam_.resize(n2_);
    for (int j = 0; j < n2_; ++j) seam_[j] = flat_curl() * L1_ * (j * h2_);
  }

  int degree() const { return N_; }
  /// Field strength b = 2 pi N / |Sigma| (metric normalized).
  double b() const { return b_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double h1() const { return h1_; }
  double h2() const { return h2_; }
  double L1() const { return L1_; }
  double L2() const { return L2_; }

  /// Background angle per plaquette, identical for every plaquette.
  double plaquette_phase() const { return plaquette_phase_; }

  /// Background angle on the x^1 link leaving site (i, j).
  double background_phi1(int i, int j) const { return i == n1_ - 1 ? -seam_[j] : 0.0; }
  /// Background angle on the x^2 link leaving site (i, j).
  double background_phi2(int i, int /*j*/) const { return h2_ * flat_curl() * (i * h1_); }

  /// Transition phase T(x^2) = exp(i b L1 x^2) applied across the x^1 seam.
  complex transition(int j) const { return std::polar(1.0, seam_[j]); }

 private:
  // d1 a2 in flat coordinates, plaquette_phase / (h1 h2); equals b when rho == 0.
  double flat_curl() const { return 2.0 * std::numbers::pi * N_ / (L1_ * L2_); }

  int N_;
  int n1_, n2_;
  double L1_, L2_, h1_, h2_;
  double b_ = 0.0;
  double plaquette_phase_ = 0.0;
  std::vector<double> seam_;
};

inline BundleConnection make_bundle(int N, const TorusGeometry& geom) {
  return BundleConnection(N, geom);
}

/// Dynamical state of the gauged flow in Coulomb gauge.
struct FlowState {
  double t = 0.0;
  OneForm A;
  ComplexField phi;
  std::optional<RealField> a0;  // cached temporal potential, mean-zero in dmu

  FlowState() = default;
  FlowState(int n1, int n2) : A(n1, n2), phi(n1, n2) {}
};

/// Spatial gauge transformation (A, Phi) -> (A + d chi, e^{i chi} Phi), with the
/// forward-difference d chi that makes the link stencil exactly covariant.
inline FlowState apply_gauge(const FlowState& state, const RealField& chi,
                             const TorusGeometry& geom) {
  if (!geom.matches(chi)) throw ConfigError("gauge function shape mismatch");
  FlowState out = state;
  out.A += grad(chi, geom, Stencil::Lattice);
  for (std::size_t k = 0; k < chi.size(); ++k) out.phi[k] *= std::polar(1.0, chi[k]);
  return out;
}

}  // namespace vflow
