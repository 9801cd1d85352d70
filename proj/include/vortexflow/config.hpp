#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vortexflow/errors.hpp"
#include "vortexflow/flow.hpp"
#include "vortexflow/geometry.hpp"
#include "vortexflow/initial.hpp"

namespace vflow {

struct GeometrySpec {
  double L1 = 2.0 * std::numbers::pi;
  double L2 = 2.0 * std::numbers::pi;
  int n1 = 64;
  int n2 = 64;
  double rho_constant = 0.0;
  double rho_sine = 0.0;  // amplitude of sin(2 pi x^1 / L1) added to rho
};

struct OutputSpec {
  std::string series = "series.csv";
  std::string snapshot = "final.snap";  // empty: none
  long snapshot_every = 0;              // steps between intermediate snapshots; 0: none
};

struct RunConfig {
  GeometrySpec geometry;
  int N = 1;
  InitSpec init;
  StepPolicy step;
  OutputSpec output;
  /// Non-fatal findings of validation (e.g. dt above the Euler bound).
  std::vector<std::string> warnings;
};

inline TorusGeometry make_geometry(const GeometrySpec& g) {
  std::optional<std::vector<double>> rho;
  if (g.rho_constant != 0.0 || g.rho_sine != 0.0) {
    if (g.n1 < TorusGeometry::kMinResolution || g.n2 < TorusGeometry::kMinResolution)
      throw ConfigError("grid resolution must be at least 8 points per direction");
    std::vector<double> r(static_cast<std::size_t>(g.n1) * g.n2);
    for (int j = 0; j < g.n2; ++j)
      for (int i = 0; i < g.n1; ++i)
        r[static_cast<std::size_t>(j) * g.n1 + i] =
            g.rho_constant + g.rho_sine * std::sin(2.0 * std::numbers::pi * i / g.n1);
    rho = std::move(r);
  }
  return TorusGeometry(g.L1, g.L2, g.n1, g.n2, std::move(rho));
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x, std::chars_format::general);
  if (ec != std::errc() || p != end || !std::isfinite(x))
    throw ConfigError(key + ": expected a decimal number, got '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end)
    throw ConfigError(key + ": expected a non-negative 64-bit integer, got '" + v + "'");
  return x;
}

inline int parse_small_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < -(1LL << 30) || x > (1LL << 30)) throw ConfigError(key + ": value out of range");
  return static_cast<int>(x);
}

}  // namespace detail

/// Applies one "key = value" assignment. Unknown keys are errors.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const std::string& v = value;
  if (key == "geometry.L1") c.geometry.L1 = parse_double(key, v);
  else if (key == "geometry.L2") c.geometry.L2 = parse_double(key, v);
  else if (key == "geometry.L") c.geometry.L1 = c.geometry.L2 = parse_double(key, v);
  else if (key == "geometry.n1") c.geometry.n1 = parse_small_int(key, v);
  else if (key == "geometry.n2") c.geometry.n2 = parse_small_int(key, v);
  else if (key == "geometry.n") c.geometry.n1 = c.geometry.n2 = parse_small_int(key, v);
  else if (key == "geometry.rho_constant") c.geometry.rho_constant = parse_double(key, v);
  else if (key == "geometry.rho_sine") c.geometry.rho_sine = parse_double(key, v);
  else if (key == "bundle.N") c.N = parse_small_int(key, v);
  else if (key == "flow.energy") {
    if (v == "bogomolny") c.step.energy = EnergyForm::Bogomolny;
    else if (v == "direct") c.step.energy = EnergyForm::Direct;
    else throw ConfigError(key + ": expected bogomolny or direct, got '" + v + "'");
  } else if (key == "init.recipe") {
    if (v == "minimizer") c.init.recipe = InitRecipe::Minimizer;
    else if (v == "perturbed_minimizer") c.init.recipe = InitRecipe::PerturbedMinimizer;
    else if (v == "random") c.init.recipe = InitRecipe::Random;
    else throw ConfigError(key + ": expected minimizer, perturbed_minimizer or random, got '" + v + "'");
  } else if (key == "init.seed") c.init.seed = parse_seed(key, v);
  else if (key == "init.phi_amplitude") c.init.phi_amplitude = parse_double(key, v);
  else if (key == "init.a_amplitude") c.init.a_amplitude = parse_double(key, v);
  else if (key == "init.smoothing") c.init.smoothing = parse_small_int(key, v);
  else if (key == "init.target_epsilon0") {
    if (v == "none") c.init.target_epsilon0.reset();
    else c.init.target_epsilon0 = parse_double(key, v);
  } else if (key == "init.relax_tol") c.init.relax_tol = parse_double(key, v);
  else if (key == "init.relax_t_max") c.init.relax_t_max = parse_double(key, v);
  else if (key == "step.scheme") {
    if (v == "euler") c.step.scheme = Scheme::ForwardEuler;
    else if (v == "rk4") c.step.scheme = Scheme::RK4;
    else throw ConfigError(key + ": expected euler or rk4, got '" + v + "'");
  } else if (key == "step.dt") {
    if (v == "auto") c.step.dt.reset();
    else c.step.dt = parse_double(key, v);
  } else if (key == "step.safety") c.step.safety = parse_double(key, v);
  else if (key == "step.t_max") c.step.t_max = parse_double(key, v);
  else if (key == "step.grad_tol") c.step.grad_tol = parse_double(key, v);
  else if (key == "step.record_every") c.step.record_every = parse_small_int(key, v);
  else if (key == "output.series") c.output.series = v;
  else if (key == "output.snapshot") c.output.snapshot = v == "none" ? std::string() : v;
  else if (key == "output.snapshot_every") c.output.snapshot_every = parse_int(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

/// Checks ranges and cross-field consistency; appends warnings.
inline void validate(RunConfig& c) {
  if (!(c.geometry.L1 > 0.0) || !(c.geometry.L2 > 0.0))
    throw ConfigError("geometry.L1 and geometry.L2 must be positive");
  if (c.geometry.n1 < TorusGeometry::kMinResolution || c.geometry.n2 < TorusGeometry::kMinResolution)
    throw ConfigError("geometry.n1 and geometry.n2 must be at least 8");
  if (c.N < 0) throw ConfigError("bundle.N must be >= 0");
  if (c.N > 0 && c.geometry.rho_sine != 0.0)
    throw UnsupportedConfiguration("bundle.N > 0 requires a constant conformal factor (geometry.rho_sine = 0)");
  if (!(c.init.phi_amplitude >= 0.0)) throw ConfigError("init.phi_amplitude must be >= 0");
  if (!(c.init.a_amplitude >= 0.0)) throw ConfigError("init.a_amplitude must be >= 0");
  if (c.init.smoothing < 0) throw ConfigError("init.smoothing must be >= 0");
  if (c.init.target_epsilon0) {
    if (!(*c.init.target_epsilon0 > 0.0)) throw ConfigError("init.target_epsilon0 must be > 0");
    if (c.init.recipe != InitRecipe::PerturbedMinimizer)
      throw ConfigError("init.target_epsilon0 requires init.recipe = perturbed_minimizer");
  }
  if (!(c.init.relax_tol > 0.0)) throw ConfigError("init.relax_tol must be > 0");
  if (!(c.init.relax_t_max >= 0.0)) throw ConfigError("init.relax_t_max must be >= 0");
  if (c.step.dt && !(*c.step.dt > 0.0)) throw ConfigError("step.dt must be positive or auto");
  if (!(c.step.safety > 0.0 && c.step.safety <= 1.0)) throw ConfigError("step.safety must be in (0, 1]");
  if (!(c.step.t_max >= 0.0)) throw ConfigError("step.t_max must be >= 0");
  if (!(c.step.grad_tol >= 0.0)) throw ConfigError("step.grad_tol must be >= 0");
  if (c.step.record_every < 1) throw ConfigError("step.record_every must be >= 1");
  if (c.output.snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
  if (c.output.series.empty()) throw ConfigError("output.series must name a file");
  if (c.step.dt && c.step.scheme == Scheme::ForwardEuler) {
    const TorusGeometry g = make_geometry(c.geometry);
    const double limit = euler_stability_limit(g, c.step.energy);
    if (*c.step.dt > limit) {
      std::ostringstream os;
      os << "step.dt = " << *c.step.dt << " exceeds the forward Euler stability bound " << limit
         << " for this grid; proceeding as requested";
      c.warnings.push_back(os.str());
    }
  }
}

/// Parses "key = value" lines; '#' starts a comment. Later assignments of
/// the same key are errors within one text. No range validation.
inline RunConfig parse_config_entries(std::string_view text, RunConfig base = {}) {
  std::map<std::string, int> seen;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing value for '" + key + "'");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError("line " + std::to_string(line_no) + ": '" + key + "' already set on line " +
                        std::to_string(it->second));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  RunConfig c = parse_config_entries(text, std::move(base));
  validate(c);
  return c;
}

/// Splits "key=value" from a command-line override.
inline std::pair<std::string, std::string> split_assignment(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
  return {detail::trim(std::string_view(kv).substr(0, eq)), detail::trim(std::string_view(kv).substr(eq + 1))};
}

}  // namespace vflow
