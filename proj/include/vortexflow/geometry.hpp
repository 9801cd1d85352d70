#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vortexflow/errors.hpp"
#include "vortexflow/field.hpp"

namespace vflow {

/// Discrete flat torus [0, L1) x [0, L2) with metric e^{2 rho}((dx^1)^2 + (dx^2)^2).
///
/// Immutable after construction. Quadrature weights e^{2 rho} h1 h2 are
/// precomputed; with rho == 0 every weight is exactly h1 h2.
class TorusGeometry {
 public:
  static constexpr int kMinResolution = 8;

  TorusGeometry(double L1, double L2, int n1, int n2,
                std::optional<std::vector<double>> rho_samples = std::nullopt)
      : L1_(L1), L2_(L2), n1_(n1), n2_(n2) {
    if (!(L1 > 0.0) || !(L2 > 0.0) || !std::isfinite(L1) || !std::isfinite(L2))
      throw ConfigError("torus side lengths must be positive and finite");
    if (n1 < kMinResolution || n2 < kMinResolution)
      throw ConfigError("grid resolution must be at least 8 points per direction");
    h1_ = L1 / n1;
    h2_ = L2 / n2;
    rho_ = RealField(n1, n2, 0.0);
    if (rho_samples) {
      if (rho_samples->size() != rho_.size())
        throw ConfigError("rho samples must have n1*n2 entries");
      std::copy(rho_samples->begin(), rho_samples->end(), rho_.begin());
    }
    flat_ = std::all_of(rho_.begin(), rho_.end(),
                        [&](double r) { return r == rho_[0]; });
    weight_ = RealField(n1, n2);
    CompensatedSum area;
    max_rho_ = rho_[0];
    for (std::size_t k = 0; k < rho_.size(); ++k) {
      if (!std::isfinite(rho_[k])) throw ConfigError("rho samples must be finite");
      weight_[k] = std::exp(2.0 * rho_[k]) * h1_ * h2_;
      area.add(weight_[k]);
      max_rho_ = std::max(max_rho_, rho_[k]);
    }
    area_ = flat_ ? std::exp(2.0 * rho_[0]) * L1_ * L2_ : area.value();
  }

  double L1() const { return L1_; }
  double L2() const { return L2_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double h1() const { return h1_; }
  double h2() const { return h2_; }
  double cell() const { return h1_ * h2_; }
  std::size_t sites() const { return rho_.size(); }

  const RealField& rho() const { return rho_; }
  /// e^{2 rho} h1 h2 per site.
  const RealField& weight() const { return weight_; }
  double area() const { return area_; }
  double max_rho() const { return max_rho_; }
  /// True when rho is spatially constant (the metric is a scaled flat one).
  bool conformally_flat_constant() const { return flat_; }

  double x1(int i) const { return i * h1_; }
  double x2(int j) const { return j * h2_; }

  template <typename T>
  bool matches(const SiteField<T>& f) const {
    return f.n1() == n1_ && f.n2() == n2_;
  }

 private:
  double L1_, L2_;
  int n1_, n2_;
  double h1_ = 0.0, h2_ = 0.0;
  RealField rho_;
  RealField weight_;
  double area_ = 0.0;
  double max_rho_ = 0.0;
  bool flat_ = true;
};

inline TorusGeometry make_geometry(double L1, double L2, int n1, int n2,
                                   std::optional<std::vector<double>> rho = std::nullopt) {
  return TorusGeometry(L1, L2, n1, n2, std::move(rho));
}

inline double area(const TorusGeometry& geom) { return geom.area(); }

enum class RegimeKind { Supercritical, Critical, Subcritical };

inline const char* to_string(RegimeKind k) {
  switch (k) {
    case RegimeKind::Supercritical: return "supercritical";
    case RegimeKind::Critical: return "critical";
    case RegimeKind::Subcritical: return "subcritical";
  }
  return "?";
}

/// Position of the area relative to the Bradlow threshold 4 pi N.
struct Regime {
  RegimeKind kind;
  double gap;  // |Sigma| - 4 pi N
};

inline void require_nonnegative_degree(int N) {
  if (N < 0) throw ConfigError("bundle degree N must be non-negative");
}

inline double background_field_strength(int N, const TorusGeometry& geom) {
  require_nonnegative_degree(N);
  return 2.0 * std::numbers::pi * N / geom.area();
}

inline Regime classify_area(int N, double area) {
  require_nonnegative_degree(N);
  const double gap = area - 4.0 * std::numbers::pi * N;
  if (std::abs(gap) <= 1e-12 * area) return {RegimeKind::Critical, gap};
  return {gap > 0.0 ? RegimeKind::Supercritical : RegimeKind::Subcritical, gap};
}

inline Regime regime(int N, const TorusGeometry& geom) {
  return classify_area(N, geom.area());
}

/// Minimum of the energy over finite-energy configurations of degree N.
inline double v_min_for_area(int N, double area) {
  require_nonnegative_degree(N);
  const double pi = std::numbers::pi;
  if (area > 4.0 * pi * N) return pi * N;
  const double d = 4.0 * pi * N - area;
  return pi * N + d * d / (8.0 * area);
}

inline double v_min(int N, const TorusGeometry& geom) {
  return v_min_for_area(N, geom.area());
}

/// l = 2 pi N - |Sigma| / 2, the signed defect of the flux against the area.
inline double subcritical_defect(int N, const TorusGeometry& geom) {
  return 2.0 * std::numbers::pi * N - 0.5 * geom.area();
}

}  // namespace vflow
