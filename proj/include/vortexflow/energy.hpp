#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "vortexflow/bundle.hpp"
#include "vortexflow/calculus.hpp"
#include "vortexflow/covariant.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/geometry.hpp"
#include "vortexflow/trig.hpp"

namespace vflow {

/// Which discrete functional drives the flow.
///
/// Direct:    1/2 sum (|D1 Phi|^2 + |D2 Phi|^2) h1h2 + 1/2 sum B^2 w + 1/8 sum (1-|Phi|^2)^2 w
/// Bogomolny: pi N + 1/2 sum 4|eta|^2 h1h2 + 1/2 sum v^2 w,
///            eta = (D1 + i D2) Phi / 2,  v = B - (1 - |Phi|^2) / 2
///
/// Here w = e^{2 rho} h1 h2. Both discretize the same continuum energy and
/// agree exactly on spatially constant fields. The Bogomolny form is bounded
/// below by pi N on the lattice itself, so its minimizers solve the discrete
/// first-order equations whenever those admit solutions.
enum class EnergyForm { Direct, Bogomolny };

inline const char* to_string(EnergyForm f) {
  return f == EnergyForm::Direct ? "direct" : "bogomolny";
}

struct Gradient {
  OneForm A;
  ComplexField phi;

  Gradient() = default;
  Gradient(int n1, int n2) : A(n1, n2), phi(n1, n2) {}
};

/// Scalars produced by one sweep over the lattice.
struct EnergyEvaluation {
  double direct = 0.0;     // direct-form energy
  double bogomolny = 0.0;  // sum-of-squares form, including pi N
  double flux = 0.0;       // sum of plaquette angles
  double grad_norm_sq = 0.0;
};

/// Evaluates both discrete energies and the exact gradient of the selected
/// one, with respect to <A, A'> = sum A.A' h1h2 and <Phi, Phi'> = sum Re(Phi* Phi') w.
///
/// Owns scratch buffers; one instance per thread.
class DiscreteEnergy {
 public:
  DiscreteEnergy(const TorusGeometry& geom, const BundleConnection& bundle, EnergyForm form)
      : geom_(&geom), bundle_(&bundle), form_(form), n1_(geom.n1()), n2_(geom.n2()),
        bg1_(n1_, n2_), bg2_(n1_, n2_), inv_metric_(n1_, n2_), w1_(n1_, n2_), w2_(n1_, n2_),
        next1_(n1_, n2_), next2_(n1_, n2_), eta_(n1_, n2_), v_(n1_, n2_), B_(n1_, n2_),
        c1_(n1_), s1_(n1_), c2_(n1_), s2_(n1_) {
    if (bundle.n1() != n1_ || bundle.n2() != n2_)
      throw ConfigError("bundle and geometry grids differ");
    for (int j = 0; j < n2_; ++j)
      for (int i = 0; i < n1_; ++i) {
        bg1_(i, j) = std::polar(1.0, -bundle.background_phi1(i, j));
        bg2_(i, j) = std::polar(1.0, -bundle.background_phi2(i, j));
      }
    for (std::size_t k = 0; k < inv_metric_.size(); ++k)
      inv_metric_[k] = std::exp(-2.0 * geom.rho()[k]);
  }

  EnergyForm form() const { return form_; }
  const TorusGeometry& geometry() const { return *geom_; }
  const BundleConnection& bundle() const { return *bundle_; }

  /// Value of the selected form.
  double value(const OneForm& A, const ComplexField& phi) {
    const EnergyEvaluation e = evaluate(A, phi, nullptr);
    return form_ == EnergyForm::Direct ? e.direct : e.bogomolny;
  }

  Gradient gradient(const OneForm& A, const ComplexField& phi) {
    Gradient g(n1_, n2_);
    evaluate(A, phi, &g);
    return g;
  }

  /// One or two sweeps: energies always, gradient when g is non-null.
  EnergyEvaluation evaluate(const OneForm& A, const ComplexField& phi, Gradient* g) {
    EnergyEvaluation out;
    prepare(A, phi, out);
    if (g) {
      if (form_ == EnergyForm::Direct)
        direct_gradient(phi, *g, out);
      else
        bogomolny_gradient(phi, *g, out);
    }
    return out;
  }

  /// Valid after evaluate(): eta, v, B and the transported neighbours.
  const ComplexField& eta() const { return eta_; }
  const RealField& v() const { return v_; }
  const RealField& B() const { return B_; }

 private:
  void prepare(const OneForm& A, const ComplexField& phi, EnergyEvaluation& out) {
    const int n1 = n1_, n2 = n2_;
    const double h1 = geom_->h1(), h2 = geom_->h2();
    const double i1 = 1.0 / h1, i2 = 1.0 / h2;
    const double base = bundle_->plaquette_phase();
    const auto& w = geom_->weight();
    const complex I(0.0, 1.0);
    // Rows are summed plainly and combined with compensation; the energy then
    // carries about one rounding error, which central differences need.
    CompensatedSum kin_t, mag_t, pot_t, se_t, sv_t, circ_t;
    for (int j = 0; j < n2; ++j) {
      double kin = 0.0, mag = 0.0, pot = 0.0, se = 0.0, sv = 0.0, circulation = 0.0;
      const int jp = j + 1 == n2 ? 0 : j + 1;
      const std::size_t row = static_cast<std::size_t>(j) * n1;
      const std::size_t row_up = static_cast<std::size_t>(jp) * n1;
      expmi_row(A.a1.data() + row, h1, c1_.data(), s1_.data(), n1);
      expmi_row(A.a2.data() + row, h2, c2_.data(), s2_.data(), n1);
      for (int i = 0; i < n1; ++i) {
        const int ip = i + 1 == n1 ? 0 : i + 1;
        const std::size_t k = row + i;
        const std::size_t k1 = row + ip;
        const std::size_t k2 = row_up + i;
        const double a1 = A.a1[k], a2 = A.a2[k];
        const complex u1 = bg1_[k] * complex(c1_[i], s1_[i]);
        const complex u2 = bg2_[k] * complex(c2_[i], s2_[i]);
        w1_[k] = u1;
        w2_[k] = u2;
        const complex p = phi[k];
        const complex t1 = u1 * phi[k1];
        const complex t2 = u2 * phi[k2];
        next1_[k] = t1;
        next2_[k] = t2;
        const complex d1 = (t1 - p) * i1;
        const complex d2 = (t2 - p) * i2;
        const complex e = 0.5 * (d1 + I * d2);
        eta_[k] = e;
        const double circ = h1 * (a1 - A.a1[k2]) + h2 * (A.a2[k1] - a2);
        const double theta = base + circ;
        if (!(std::abs(theta) < std::numbers::pi))
          throw ResolutionError("plaquette phase outside the principal branch; the gauge "
                                "field is too rough for the grid");
        circulation += circ;
        const double b = theta / w[k];
        B_[k] = b;
        const double s = 1.0 - std::norm(p);
        const double vv = b - 0.5 * s;
        v_[k] = vv;
        kin += std::norm(d1) + std::norm(d2);
        mag += b * b * w[k];
        pot += s * s * w[k];
        se += std::norm(e);
        sv += vv * vv * w[k];
      }
      kin_t.add(kin);
      mag_t.add(mag);
      pot_t.add(pot);
      se_t.add(se);
      sv_t.add(sv);
      circ_t.add(circulation);
    }
    const double cell = geom_->cell();
    out.direct = 0.5 * kin_t.value() * cell + 0.5 * mag_t.value() + 0.125 * pot_t.value();
    out.bogomolny = std::numbers::pi * bundle_->degree() + 2.0 * se_t.value() * cell + 0.5 * sv_t.value();
    // The circulations telescope to zero; summing them apart keeps the flux at 2 pi N.
    out.flux = base * (static_cast<double>(n1) * n2) + circ_t.value();
  }

  void bogomolny_gradient(const ComplexField& phi, Gradient& g, EnergyEvaluation& out) const {
    const int n1 = n1_, n2 = n2_;
    const double i1 = 1.0 / geom_->h1(), i2 = 1.0 / geom_->h2();
    const auto& w = geom_->weight();
    const complex I(0.0, 1.0);
    double gA = 0.0, gP = 0.0;
    for (int j = 0; j < n2; ++j) {
      const int jm = j == 0 ? n2 - 1 : j - 1;
      const std::size_t row = static_cast<std::size_t>(j) * n1;
      const std::size_t row_dn = static_cast<std::size_t>(jm) * n1;
      for (int i = 0; i < n1; ++i) {
        const int im = i == 0 ? n1 - 1 : i - 1;
        const std::size_t k = row + i;
        const std::size_t km1 = row + im;
        const std::size_t km2 = row_dn + i;
        const complex e = eta_[k];
        const complex back1 = std::conj(w1_[km1]) * eta_[km1];
        const complex back2 = std::conj(w2_[km2]) * eta_[km2];
        const complex gp =
            2.0 * inv_metric_[k] * ((back1 - e) * i1 - I * (back2 - e) * i2) + v_[k] * phi[k];
        const complex ce = std::conj(e);
        const double ga1 = 2.0 * (ce * next1_[k]).imag() + (v_[k] - v_[km2]) * i2;
        const double ga2 = 2.0 * (ce * next2_[k]).real() + (v_[km1] - v_[k]) * i1;
        g.phi[k] = gp;
        g.A.a1[k] = ga1;
        g.A.a2[k] = ga2;
        gA += ga1 * ga1 + ga2 * ga2;
        gP += std::norm(gp) * w[k];
      }
    }
    out.grad_norm_sq = gA * geom_->cell() + gP;
  }

  void direct_gradient(const ComplexField& phi, Gradient& g, EnergyEvaluation& out) const {
    const int n1 = n1_, n2 = n2_;
    const double i1 = 1.0 / geom_->h1(), i2 = 1.0 / geom_->h2();
    const double i11 = i1 * i1, i22 = i2 * i2;
    const auto& w = geom_->weight();
    double gA = 0.0, gP = 0.0;
    for (int j = 0; j < n2; ++j) {
      const int jm = j == 0 ? n2 - 1 : j - 1;
      const std::size_t row = static_cast<std::size_t>(j) * n1;
      const std::size_t row_dn = static_cast<std::size_t>(jm) * n1;
      for (int i = 0; i < n1; ++i) {
        const int im = i == 0 ? n1 - 1 : i - 1;
        const std::size_t k = row + i;
        const std::size_t km1 = row + im;
        const std::size_t km2 = row_dn + i;
        const complex p = phi[k];
        const complex back1 = std::conj(w1_[km1]) * phi[km1];
        const complex back2 = std::conj(w2_[km2]) * phi[km2];
        const complex lap = (next1_[k] + back1 - 2.0 * p) * i11 + (next2_[k] + back2 - 2.0 * p) * i22;
        const complex gp = -inv_metric_[k] * lap - 0.5 * (1.0 - std::norm(p)) * p;
        const complex cp = std::conj(p);
        const double ga1 = -(cp * next1_[k]).imag() * i1 + (B_[k] - B_[km2]) * i2;
        const double ga2 = -(cp * next2_[k]).imag() * i2 + (B_[km1] - B_[k]) * i1;
        g.phi[k] = gp;
        g.A.a1[k] = ga1;
        g.A.a2[k] = ga2;
        gA += ga1 * ga1 + ga2 * ga2;
        gP += std::norm(gp) * w[k];
      }
    }
    out.grad_norm_sq = gA * geom_->cell() + gP;
  }

  const TorusGeometry* geom_;
  const BundleConnection* bundle_;
  EnergyForm form_;
  int n1_, n2_;
  ComplexField bg1_, bg2_;
  RealField inv_metric_;
  ComplexField w1_, w2_, next1_, next2_, eta_;
  RealField v_, B_;
  std::vector<double> c1_, s1_, c2_, s2_;  // per-row link phases
};

/// Energy of the selected form at (A, Phi).
inline double discrete_energy(const OneForm& A, const ComplexField& phi, const TorusGeometry& geom,
                              const BundleConnection& bundle, EnergyForm form) {
  DiscreteEnergy e(geom, bundle, form);
  return e.value(A, phi);
}

}  // namespace vflow
