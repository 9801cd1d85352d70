#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "vortexflow/bundle.hpp"
#include "vortexflow/field.hpp"
#include "vortexflow/geometry.hpp"
#include "vortexflow/initial.hpp"
#include "vortexflow/random.hpp"

namespace vflow::testing {

inline constexpr double kPi = std::numbers::pi;

inline RealField sample(const TorusGeometry& g, auto&& fn) {
  RealField f(g.n1(), g.n2());
  for (int j = 0; j < g.n2(); ++j)
    for (int i = 0; i < g.n1(); ++i) f(i, j) = fn(g.x1(i), g.x2(j));
  return f;
}

inline RealField noise(const TorusGeometry& g, std::uint64_t seed, double amp = 1.0) {
  Rng rng(seed);
  RealField f(g.n1(), g.n2());
  for (auto& v : f) v = amp * rng.normal();
  return f;
}

inline RealField mean_free(RealField f) {
  double m = 0.0;
  for (double v : f) m += v;
  m /= static_cast<double>(f.size());
  for (auto& v : f) v -= m;
  return f;
}

/// Smooth section plus a smooth small connection; nonvanishing almost everywhere.
inline FlowState smooth_state(const TorusGeometry& g, const BundleConnection& b, std::uint64_t seed,
                              double a_amp = 0.2) {
  FlowState s(g.n1(), g.n2());
  s.phi = random_section(b, g, seed, 40);
  double m = 0.0;
  for (auto p : s.phi) m = std::max(m, std::abs(p));
  for (auto& p : s.phi) p *= 0.9 / m;
  s.A = random_divfree_oneform(g, seed + 7, a_amp);
  return s;
}

/// Rough random state: raw noise, used where smoothness must not matter.
inline FlowState rough_state(const TorusGeometry& g, const BundleConnection& b, std::uint64_t seed) {
  FlowState s(g.n1(), g.n2());
  s.phi = random_section(b, g, seed, 0);
  for (auto& p : s.phi) p *= 0.5;
  Rng rng(seed + 3);
  for (auto& v : s.A.a1) v = 0.05 * rng.normal();
  for (auto& v : s.A.a2) v = 0.05 * rng.normal();
  return s;
}

inline double max_abs_diff(const RealField& a, const RealField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs_diff(const ComplexField& a, const ComplexField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs(const RealField& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace vflow::testing
