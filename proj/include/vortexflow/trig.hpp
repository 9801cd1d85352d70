#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <complex>
#include <cstddef>

namespace vflow {

namespace detail {

constexpr double kTwoOverPi = 6.36619772367581382433e-01;
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Lo = 6.07710050650619224932e-11;
constexpr double kShifter = 6755399441055744.0;  // 1.5 * 2^52: round to nearest
constexpr double kReduceLimit = 1e5;

// Branch-free (cos x, sin x) for |x| < kReduceLimit: Cody-Waite reduction by
// pi/2 and fdlibm's kernel polynomials on [-pi/4, pi/4].
inline void sincos_reduced(double x, double& c_out, double& s_out) {
  const double y = x * kTwoOverPi + kShifter;
  // Low mantissa bits of y hold the nearest integer k in two's complement.
  const std::uint64_t q = std::bit_cast<std::uint64_t>(y) & 3u;
  const double kd = y - kShifter;
  const double r = (x - kd * kPio2Hi) - kd * kPio2Lo;
  const double z = r * r;
  const double s =
      r + r * z *
              (-1.66666666666666324348e-01 +
               z * (8.33333333332248946124e-03 +
                    z * (-1.98412698298579493134e-04 +
                         z * (2.75573137070700676789e-06 +
                              z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)))));
  const double c =
      1.0 - 0.5 * z +
      z * z *
          (4.16666666666666019037e-02 +
           z * (-1.38888888888741095749e-03 +
                z * (2.48015872894767294178e-05 +
                     z * (-2.75573143513906633035e-07 +
                          z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));
  const std::uint64_t odd = 0u - (q & 1u);
  const std::uint64_t cb = std::bit_cast<std::uint64_t>(c), sb = std::bit_cast<std::uint64_t>(s);
  const std::uint64_t cos_bits = (cb & ~odd) | (sb & odd);
  const std::uint64_t sin_bits = (sb & ~odd) | (cb & odd);
  c_out = std::bit_cast<double>(cos_bits ^ ((((q + 1u) >> 1) & 1u) << 63));
  s_out = std::bit_cast<double>(sin_bits ^ ((q >> 1) << 63));
}

}  // namespace detail

/// exp(-i x) to about 1 ulp, independent of the libm in use (sin and cos
/// round differently between implementations).
inline std::complex<double> expmi(double x) {
  if (!(std::abs(x) < detail::kReduceLimit)) return {std::cos(x), -std::sin(x)};
  double c, s;
  detail::sincos_reduced(x, c, s);
  return {c, -s};
}

/// c[k] + i s[k] = exp(-i scale x[k]) for k < n; vectorizable.
inline void expmi_row(const double* x, double scale, double* c, double* s, std::size_t n) {
  bool in_range = true;
  for (std::size_t k = 0; k < n; ++k) in_range &= std::abs(scale * x[k]) < detail::kReduceLimit;
  if (!in_range) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::complex<double> e = expmi(scale * x[k]);
      c[k] = e.real();
      s[k] = e.imag();
    }
    return;
  }
  for (std::size_t k = 0; k < n; ++k) {
    double cc, ss;
    detail::sincos_reduced(scale * x[k], cc, ss);
    c[k] = cc;
    s[k] = -ss;
  }
}

}  // namespace vflow
