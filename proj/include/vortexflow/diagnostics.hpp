#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "vortexflow/bundle.hpp"
#include "vortexflow/calculus.hpp"
#include "vortexflow/covariant.hpp"
#include "vortexflow/energy.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/flow.hpp"
#include "vortexflow/geometry.hpp"

namespace vflow {

/// Gauge-invariant observables of one state.
struct DiagnosticsRecord {
  double t = 0.0;
  double energy = 0.0;            // direct form V
  double energy_bogomolny = 0.0;  // pi N + 1/2 sum (4|eta|^2 + v^2)
  double eta_l2 = 0.0;
  double v_l2 = 0.0;
  double y_l2 = 0.0;
  double phi_l2 = 0.0;
  double a0_l2 = 0.0;
  double grad_norm = 0.0;
  double flux = 0.0;
  long vortex_total = 0;
  std::optional<double> q_eta;
  std::optional<double> q_v;
};

/// Direct-form energy
///   V = 1/2 sum (|D1 Phi|^2 + |D2 Phi|^2) h1h2 + 1/2 sum B^2 w + 1/8 sum (1 - |Phi|^2)^2 w.
inline double energy(const FlowState& s, const TorusGeometry& geom, const BundleConnection& bundle) {
  DiscreteEnergy e(geom, bundle, EnergyForm::Direct);
  return e.value(s.A, s.phi);
}

/// eta = dbar_A Phi and v = B - (1 - |Phi|^2) / 2.
inline std::pair<ComplexField, RealField> bogomolny_vars(const FlowState& s,
                                                         const TorusGeometry& geom,
                                                         const BundleConnection& bundle) {
  const Links L = make_links(bundle, s.A);
  ComplexField eta = dbar(s.phi, L, bundle);
  RealField v = magnetic_field(s.A, bundle, geom);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= 0.5 * (1.0 - std::norm(s.phi[k]));
  return {std::move(eta), std::move(v)};
}

/// pi N + 1/2 sum (4 |eta|^2 e^{-2rho} + v^2) w.
inline double energy_bogomolny(const ComplexField& eta, const RealField& v,
                               const TorusGeometry& geom, int N) {
  double se = 0.0, sv = 0.0;
  const auto& w = geom.weight();
  for (std::size_t k = 0; k < v.size(); ++k) {
    se += std::norm(eta[k]);
    sv += v[k] * v[k] * w[k];
  }
  return std::numbers::pi * N + 2.0 * se * geom.cell() + 0.5 * sv;
}

inline double energy_bogomolny(const FlowState& s, const TorusGeometry& geom,
                               const BundleConnection& bundle) {
  auto [eta, v] = bogomolny_vars(s, geom, bundle);
  return energy_bogomolny(eta, v, geom, bundle.degree());
}

/// y = v - l / |Sigma| with l = 2 pi N - |Sigma| / 2.
inline RealField shifted_v(const RealField& v, const TorusGeometry& geom, int N) {
  RealField y = v;
  const double c = (2.0 * std::numbers::pi * N - 0.5 * geom.area()) / geom.area();
  for (auto& x : y) x -= c;
  return y;
}

/// (||Phi||_{L2}, ||y||_{L2}).
inline std::pair<double, double> subcritical_residual(const ComplexField& phi, const RealField& v,
                                                      const TorusGeometry& geom, int N) {
  return {l2_norm(phi, geom), l2_norm(shifted_v(v, geom, N), geom)};
}

inline std::pair<double, double> subcritical_residual(const FlowState& s, const TorusGeometry& geom,
                                                      const BundleConnection& bundle) {
  auto [eta, v] = bogomolny_vars(s, geom, bundle);
  return subcritical_residual(s.phi, v, geom, bundle.degree());
}

/// Q_eta = sum (4 e^{-4rho} |del_A eta|^2 + e^{-2rho} |Phi|^2 |eta|^2) w, with
/// del_A = (D1 - i D2) / 2 on the same forward stencil and twist as D_A Phi;
/// Q_v = sum (e^{-2rho} |grad v|^2 + |Phi|^2 v^2) w with forward differences.
inline std::pair<double, double> quadratic_forms(const FlowState& s, const ComplexField& eta,
                                                 const RealField& v, const TorusGeometry& geom,
                                                 const BundleConnection& bundle) {
  const Links L = make_links(bundle, s.A);
  auto [d1, d2] = covariant_derivative(eta, L, bundle);
  const OneForm gv = grad(v, geom, Stencil::Lattice);
  const auto& w = geom.weight();
  const auto& rho = geom.rho();
  const complex I(0.0, 1.0);
  double qe = 0.0, qv = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double em = std::exp(-2.0 * rho[k]);
    const complex del = 0.5 * (d1[k] - I * d2[k]);
    const double p2 = std::norm(s.phi[k]);
    qe += (4.0 * em * em * std::norm(del) + em * p2 * std::norm(eta[k])) * w[k];
    qv += (em * (gv.a1[k] * gv.a1[k] + gv.a2[k] * gv.a2[k]) + p2 * v[k] * v[k]) * w[k];
  }
  return {qe, qv};
}

struct Vortex {
  int i = 0;  // plaquette lower-left site
  int j = 0;
  int winding = 0;
};

struct VortexReport {
  std::vector<Vortex> vortices;  // plaquettes with nonzero winding
  long total = 0;
  std::size_t degenerate_sites = 0;  // |Phi| < 1e-12 max|Phi|
  bool degenerate() const { return degenerate_sites > 0; }
};

/// Plaquette windings from gauge-invariant edge phases.
///
/// Edge phase psi_j(x) = arg(conj(Phi(x)) W_j(x) Phi(x+e_j)); the winding is
/// (psi1(x) + psi2(x+e1) - psi1(x+e2) - psi2(x) + theta(x)) / 2 pi, an integer
/// up to roundoff. The psi terms telescope, so the total is sum theta / 2 pi = N.
inline VortexReport locate_vortices(const FlowState& s, const TorusGeometry& geom,
                                    const BundleConnection& bundle) {
  const int n1 = geom.n1(), n2 = geom.n2();
  const Links L = make_links(bundle, s.A);
  const RealField theta = plaquette_angles(bundle, s.A);
  RealField psi1(n1, n2), psi2(n1, n2);
  VortexReport rep;
  const double cutoff = 1e-12 * sup_norm(s.phi);
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const complex cp = std::conj(s.phi(i, j));
      psi1(i, j) = std::arg(cp * transported_next1(s.phi, L, i, j));
      psi2(i, j) = std::arg(cp * transported_next2(s.phi, L, i, j));
      if (!(std::abs(s.phi(i, j)) >= cutoff) || cutoff == 0.0) ++rep.degenerate_sites;
    }
  for (int j = 0; j < n2; ++j) {
    const int jp = j + 1 == n2 ? 0 : j + 1;
    for (int i = 0; i < n1; ++i) {
      const int ip = i + 1 == n1 ? 0 : i + 1;
      const double circ = psi1(i, j) + psi2(ip, j) - psi1(i, jp) - psi2(i, j) + theta(i, j);
      const int w = static_cast<int>(std::lround(circ / (2.0 * std::numbers::pi)));
      if (w != 0) rep.vortices.push_back({i, j, w});
      rep.total += w;
    }
  }
  return rep;
}

/// Full record for a state, evaluated through the engine that drives the flow
/// so that recorded and recomputed values are bit-identical.
inline DiagnosticsRecord compute_record(FlowEngine& engine, const FlowState& s,
                                        bool with_quadratic_forms = false) {
  const TorusGeometry& geom = engine.geometry();
  const BundleConnection& bundle = engine.bundle();
  const EnergyEvaluation e = engine.velocity(s.A, s.phi, nullptr);
  const DiscreteEnergy& en = engine.energy();
  DiagnosticsRecord r;
  r.t = s.t;
  r.energy = e.direct;
  r.energy_bogomolny = e.bogomolny;
  // eta carries the weight e^{-2rho} w = h1 h2, as in the decomposition.
  {
    double se = 0.0;
    for (const auto& x : en.eta()) se += std::norm(x);
    r.eta_l2 = std::sqrt(se * geom.cell());
  }
  r.v_l2 = l2_norm(en.v(), geom);
  auto [phi_l2, y_l2] = subcritical_residual(s.phi, en.v(), geom, bundle.degree());
  r.phi_l2 = phi_l2;
  r.y_l2 = y_l2;
  r.a0_l2 = l2_norm(engine.a0(), geom);
  r.grad_norm = std::sqrt(e.grad_norm_sq);
  r.flux = e.flux;
  r.vortex_total = locate_vortices(s, geom, bundle).total;
  if (with_quadratic_forms) {
    auto [qe, qv] = quadratic_forms(s, en.eta(), en.v(), geom, bundle);
    r.q_eta = qe;
    r.q_v = qv;
  }
  return r;
}

inline DiagnosticsRecord diagnose(const FlowState& s, const TorusGeometry& geom,
                                  const BundleConnection& bundle,
                                  EnergyForm form = EnergyForm::Bogomolny,
                                  bool with_quadratic_forms = false) {
  FlowEngine engine(geom, bundle, form);
  return compute_record(engine, s, with_quadratic_forms);
}

}  // namespace vflow
