#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vortexflow/config.hpp"
#include "vortexflow/diagnostics.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/initial.hpp"
#include "vortexflow/io.hpp"
#include "vortexflow/rate_fit.hpp"
#include "vortexflow/run.hpp"

namespace vflow {

enum ExitStatus : int {
  kExitConverged = 0,
  kExitNotConverged = 2,
  kExitBlowUp = 3,
  kExitConfig = 4,
  kExitIo = 5,
};

/// Maps the library's exceptions onto exit statuses. Call inside a catch block.
inline int exit_status_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const BlowUpError& e) {
    err << "error: blow-up at step " << e.step << ": " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const ResolutionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolvabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InsufficientDataError& e) {
    err << "insufficient data: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

/// Command-line inputs shared by run and sweep. Precedence: --set and --seed
/// over the config file over built-in defaults.
struct CommonOptions {
  std::optional<std::string> config_path;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const CommonOptions& o) {
  RunConfig c;
  if (o.config_path) {
    // Validated once after the overrides, so flags can repair a file value.
    c = parse_config_entries(read_text_file(*o.config_path));
  }
  for (const auto& kv : o.sets) {
    auto [k, v] = split_assignment(kv);
    set_config_value(c, k, v);
  }
  if (o.seed) c.init.seed = *o.seed;
  validate(c);
  return c;
}

struct FitReport {
  std::string column;
  std::optional<RateFit> fit;
  std::string error;
};

inline FitReport fit_column(const std::vector<DiagnosticsRecord>& series, const std::string& column) {
  std::vector<double> t, v;
  for (const auto& r : series) {
    t.push_back(r.t);
    if (column == "eta_l2") v.push_back(r.eta_l2);
    else if (column == "v_l2") v.push_back(r.v_l2);
    else if (column == "phi_l2") v.push_back(r.phi_l2);
    else if (column == "y_l2") v.push_back(r.y_l2);
    else if (column == "a0_l2") v.push_back(r.a0_l2);
    else v.push_back(r.grad_norm);
  }
  FitReport rep{column, std::nullopt, {}};
  try {
    rep.fit = fit_rate(t, v);
  } catch (const InsufficientDataError& e) {
    rep.error = e.what();
  }
  return rep;
}

/// Everything cmd_run reports about one trajectory.
struct RunSummary {
  RunStatus status = RunStatus::MaxTime;
  Regime regime;
  double area = 0.0;
  double v_min = 0.0;
  int N = 0;
  long steps = 0;
  double dt = 0.0;
  double init_scale = 1.0;
  DiagnosticsRecord final_record;
  FitReport fit_a, fit_b;  // (eta, v) above the threshold, (phi, y) below
  long monotonicity_violations = 0;
  double max_energy_increase = 0.0;

  int exit_status() const { return status == RunStatus::Converged ? kExitConverged : kExitNotConverged; }
};

inline std::string format_fit(const FitReport& f) {
  std::ostringstream os;
  if (f.fit)
    os << "delta_" << f.column << "=" << format_double(f.fit->delta) << " (R2=" << format_double(f.fit->r2)
       << ", window=[" << format_double(f.fit->t_a) << "," << format_double(f.fit->t_b) << "])";
  else
    os << "delta_" << f.column << "=n/a";
  return os.str();
}

inline std::string summary_line(const RunSummary& s) {
  const auto& r = s.final_record;
  std::ostringstream os;
  os << "status=" << (s.status == RunStatus::Converged ? "converged" : "not_converged")
     << " regime=" << to_string(s.regime.kind) << " area=" << format_double(s.area)
     << " v_min=" << format_double(s.v_min) << " V=" << format_double(r.energy)
     << " eta_l2=" << format_double(r.eta_l2) << " v_l2=" << format_double(r.v_l2)
     << " phi_l2=" << format_double(r.phi_l2) << " y_l2=" << format_double(r.y_l2)
     << " vortex_total=" << r.vortex_total << " t=" << format_double(r.t) << " steps=" << s.steps << ' '
     << format_fit(s.fit_a) << ' ' << format_fit(s.fit_b);
  return os.str();
}

/// Builds the initial state, runs the flow and writes series and snapshots
/// under out_dir. Errors propagate as exceptions.
inline RunSummary execute_run(const RunConfig& cfg, const std::string& out_dir, std::ostream* log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const TorusGeometry geom = make_geometry(cfg.geometry);
  const BundleConnection bundle(cfg.N, geom);

  RunSummary sum;
  sum.N = cfg.N;
  sum.regime = regime(cfg.N, geom);
  sum.area = geom.area();
  sum.v_min = v_min(cfg.N, geom);
  if (log)
    *log << "regime " << to_string(sum.regime.kind) << ", area " << sum.area << ", 4 pi N "
         << 4.0 * std::numbers::pi * cfg.N << ", v_min " << sum.v_min << '\n';

  SeriesWriter series((dir / cfg.output.series).string());
  const InitResult init = make_initial_state(cfg.init, geom, bundle, cfg.step);
  sum.init_scale = init.scale;
  if (log)
    *log << "init " << to_string(cfg.init.recipe) << ": V - v_min = " << init.energy_gap << ", amplitude scale "
         << init.scale << " (" << init.bisection_iterations << " bisection steps)\n";

  RunHooks hooks;
  hooks.on_record = [&](const DiagnosticsRecord& r, const FlowState& s, long step) {
    series.append(r);
    if (cfg.output.snapshot_every > 0 && step % cfg.output.snapshot_every == 0)
      write_snapshot((dir / ("snap_" + std::to_string(step) + ".snap")).string(), s, geom, bundle, cfg.step.energy);
  };
  hooks.on_blowup = [&](const FlowState& s, long) {
    series.flush();
    write_snapshot((dir / "blowup.snap").string(), s, geom, bundle, cfg.step.energy);
  };
  RunResult res = run(init.state, cfg.step, geom, bundle, hooks);
  series.flush();
  if (!cfg.output.snapshot.empty())
    write_snapshot((dir / cfg.output.snapshot).string(), res.state, geom, bundle, cfg.step.energy);

  sum.status = res.status;
  sum.steps = res.steps;
  sum.dt = res.dt;
  sum.final_record = res.series.back();
  const bool below = sum.regime.kind == RegimeKind::Subcritical;
  sum.fit_a = fit_column(res.series, below ? "phi_l2" : "eta_l2");
  sum.fit_b = fit_column(res.series, below ? "y_l2" : "v_l2");
  sum.monotonicity_violations = res.monotonicity_violations;
  sum.max_energy_increase = res.max_energy_increase;
  if (log && res.monotonicity_violations > 0)
    *log << "warning: " << res.monotonicity_violations << " steps increased the energy (max "
         << res.max_energy_increase << ")\n";
  return sum;
}

inline int cmd_run(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(opts);
    if (!opts.quiet)
      for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
    const RunSummary s = execute_run(cfg, opts.out_dir, opts.quiet ? nullptr : &err);
    out << summary_line(s) << '\n';
    return s.exit_status();
  } catch (...) {
    return exit_status_for_current_exception(err);
  }
}

inline void print_record(std::ostream& out, const DiagnosticsRecord& r) {
  out << "t = " << format_double(r.t) << '\n'
      << "energy = " << format_double(r.energy) << '\n'
      << "energy_bogomolny = " << format_double(r.energy_bogomolny) << '\n'
      << "eta_l2 = " << format_double(r.eta_l2) << '\n'
      << "v_l2 = " << format_double(r.v_l2) << '\n'
      << "y_l2 = " << format_double(r.y_l2) << '\n'
      << "phi_l2 = " << format_double(r.phi_l2) << '\n'
      << "a0_l2 = " << format_double(r.a0_l2) << '\n'
      << "grad_norm = " << format_double(r.grad_norm) << '\n'
      << "flux = " << format_double(r.flux) << '\n'
      << "vortex_total = " << r.vortex_total << '\n';
  if (r.q_eta) out << "q_eta = " << format_double(*r.q_eta) << '\n';
  if (r.q_v) out << "q_v = " << format_double(*r.q_v) << '\n';
}

/// Recomputes the record of a snapshot (A0 re-solved) with the flowed energy
/// form stored in its header.
inline DiagnosticsRecord diagnose_snapshot(const Snapshot& snap, bool quadratic_forms = true) {
  const TorusGeometry geom = snapshot_geometry(snap);
  const BundleConnection bundle(snap.N, geom);
  return diagnose(snap.state, geom, bundle, snap.energy, quadratic_forms);
}

inline int cmd_diagnose(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    const Snapshot snap = read_snapshot(path);
    const TorusGeometry geom = snapshot_geometry(snap);
    const BundleConnection bundle(snap.N, geom);
    const DiagnosticsRecord r = diagnose(snap.state, geom, bundle, snap.energy, true);
    const VortexReport vr = locate_vortices(snap.state, geom, bundle);
    const Regime reg = regime(snap.N, geom);
    out << "N = " << snap.N << '\n'
        << "regime = " << to_string(reg.kind) << '\n'
        << "area = " << format_double(geom.area()) << '\n'
        << "v_min = " << format_double(v_min(snap.N, geom)) << '\n';
    print_record(out, r);
    out << "vortices =";
    for (const auto& v : vr.vortices) out << " (" << v.i << "," << v.j << "):" << v.winding;
    out << '\n';
    if (vr.degenerate()) out << "warning = " << vr.degenerate_sites << " sites with |Phi| < 1e-12 max|Phi|\n";
    return 0;
  } catch (...) {
    return exit_status_for_current_exception(err);
  }
}

inline int cmd_rates(const std::string& path, const std::string& column, std::optional<double> floor,
                     std::ostream& out, std::ostream& err) {
  try {
    const SeriesTable t = read_series(path);
    const RateFit f = fit_rate(t.column("t"), t.column(column), floor);
    out << "column = " << column << '\n'
        << "delta = " << format_double(f.delta) << '\n'
        << "r2 = " << format_double(f.r2) << '\n'
        << "window = [" << format_double(f.t_a) << ", " << format_double(f.t_b) << "]\n"
        << "samples = " << f.samples << '\n'
        << "decaying = " << (f.decaying ? "yes" : "no") << '\n';
    return 0;
  } catch (...) {
    return exit_status_for_current_exception(err);
  }
}

/// Parses "a,b,c" or "start:stop:step" (inclusive, to within half a step).
inline std::vector<double> parse_grid_values(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(detail::parse_double("grid", detail::trim(tok)));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
      throw ConfigError("grid range must be start:stop:step with step > 0 and stop >= start");
    const long n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 0.5));
    for (long k = 0; k <= n; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[2]);
  } else {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(detail::parse_double("grid", detail::trim(tok)));
  }
  if (out.empty()) throw ConfigError("empty sweep grid");
  return out;
}

struct SweepRow {
  RunConfig config;
  std::optional<RunSummary> summary;
  int status = 0;
  std::string error;
};

/// Runs one configuration per grid value. The parameter is "L" (square torus
/// side), "N", or any config key; run i uses seed base + i. Rows come out in
/// grid order whatever the completion order.
inline int cmd_sweep(const CommonOptions& opts, const std::string& param, const std::string& values,
                     unsigned jobs, std::ostream& out, std::ostream& err) {
  std::vector<SweepRow> rows;
  try {
    const RunConfig base = load_config(opts);
    const std::vector<double> grid = parse_grid_values(values);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      RunConfig c = base;
      std::ostringstream v;
      v << format_double(grid[i]);
      if (param == "L") set_config_value(c, "geometry.L", v.str());
      else if (param == "N") set_config_value(c, "bundle.N", std::to_string(static_cast<long long>(std::llround(grid[i]))));
      else set_config_value(c, param, v.str());
      c.init.seed = base.init.seed + i;
      c.warnings.clear();
      validate(c);
      rows.push_back({c, std::nullopt, 0, {}});
    }
  } catch (...) {
    return exit_status_for_current_exception(err);
  }

  const unsigned workers = std::max(1u, std::min<unsigned>(jobs ? jobs : std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(rows.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) {
      std::ostringstream e;
      try {
        const std::string dir = (std::filesystem::path(opts.out_dir) / ("run_" + std::to_string(i))).string();
        rows[i].summary = execute_run(rows[i].config, dir, nullptr);
        rows[i].status = rows[i].summary->exit_status();
      } catch (...) {
        rows[i].status = exit_status_for_current_exception(e);
        rows[i].error = e.str();
        while (!rows[i].error.empty() && rows[i].error.back() == '\n') rows[i].error.pop_back();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  int overall = 0;
  try {
    std::filesystem::create_directories(opts.out_dir);
    const std::string path = (std::filesystem::path(opts.out_dir) / "sweep.csv").string();
    std::ofstream csv(path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot open '" + path + "' for writing");
    csv << "index,L1,L2,N,area,threshold,regime,status,final_energy,v_min,delta_column,delta,r2,vortex_total,error\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const TorusGeometry g = make_geometry(r.config.geometry);
      const Regime reg = regime(r.config.N, g);
      csv << i << ',' << format_double(g.L1()) << ',' << format_double(g.L2()) << ',' << r.config.N << ','
          << format_double(g.area()) << ',' << format_double(4.0 * std::numbers::pi * r.config.N) << ','
          << to_string(reg.kind) << ',' << r.status << ',';
      if (r.summary) {
        const auto& s = *r.summary;
        csv << format_double(s.final_record.energy) << ',' << format_double(s.v_min) << ',' << s.fit_a.column << ','
            << (s.fit_a.fit ? format_double(s.fit_a.fit->delta) : "") << ','
            << (s.fit_a.fit ? format_double(s.fit_a.fit->r2) : "") << ',' << s.final_record.vortex_total << ",\n";
        out << summary_line(s) << '\n';
      } else {
        std::string msg = r.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        csv << ",,,,,," << msg << '\n';
        out << "status=failed exit=" << r.status << ' ' << r.error << '\n';
      }
      if (r.status != 0 && overall == 0) overall = r.status;
    }
    if (!csv) throw IoError("write failed on '" + path + "'");
  } catch (...) {
    return exit_status_for_current_exception(err);
  }
  return overall;
}

}  // namespace vflow
