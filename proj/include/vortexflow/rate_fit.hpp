#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "vortexflow/errors.hpp"

namespace vflow {

/// value(t) ~ C exp(-delta t) fitted on [t_a, t_b].
struct RateFit {
  double delta = 0.0;
  double log_c = 0.0;
  double r2 = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  std::size_t samples = 0;
  /// False when the fitted decay over the window is below 0.1%.
  bool decaying = false;
};

/// Least-squares line through (t, ln value) over the window starting at the
/// first sample below half the maximum and ending at the last sample above the
/// floor. Non-positive samples inside the window are skipped.
inline RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& value,
                        std::optional<double> floor = std::nullopt) {
  if (t.size() != value.size()) throw InsufficientDataError("time and value lengths differ");
  if (value.empty()) throw InsufficientDataError("empty series");
  double vmax = 0.0;
  std::size_t imax = 0;
  for (std::size_t k = 0; k < value.size(); ++k)
    if (std::isfinite(value[k]) && value[k] > vmax) {
      vmax = value[k];
      imax = k;
    }
  if (!(vmax > 0.0)) throw InsufficientDataError("no positive samples");
  const double fl = floor.value_or(1e-12 * vmax);

  std::size_t a = imax;
  for (std::size_t k = imax; k < value.size(); ++k)
    if (value[k] < 0.5 * vmax) {
      a = k;
      break;
    }
  std::size_t b = a;
  bool found = false;
  for (std::size_t k = value.size(); k-- > a;)
    if (value[k] > fl) {
      b = k;
      found = true;
      break;
    }
  if (!found) throw InsufficientDataError("no samples above the floor after the transient");

  std::vector<double> xs, ys;
  for (std::size_t k = a; k <= b; ++k)
    if (value[k] > fl && std::isfinite(value[k])) {
      xs.push_back(t[k]);
      ys.push_back(std::log(value[k]));
    }
  if (xs.size() < 10) throw InsufficientDataError("fewer than 10 samples in the fit window");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double dx = xs[k] - mx, dy = ys[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("fit window has zero time extent");
  const double slope = sxy / sxx;
  RateFit f;
  f.delta = -slope;
  f.log_c = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (f.log_c + slope * xs[k]);
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  f.t_a = xs.front();
  f.t_b = xs.back();
  f.samples = xs.size();
  f.decaying = f.delta * (f.t_b - f.t_a) > 1e-3;
  return f;
}

}  // namespace vflow
