#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vortexflow/bundle.hpp"
#include "vortexflow/diagnostics.hpp"
#include "vortexflow/energy.hpp"
#include "vortexflow/errors.hpp"
#include "vortexflow/geometry.hpp"

namespace vflow {

inline constexpr const char* kSeriesHeader =
    "t,energy,energy_bogomolny,eta_l2,v_l2,y_l2,phi_l2,a0_l2,grad_norm,flux,vortex_total";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string series_row(const DiagnosticsRecord& r) {
  std::string s;
  for (double x : {r.t, r.energy, r.energy_bogomolny, r.eta_l2, r.v_l2, r.y_l2, r.phi_l2, r.a0_l2,
                   r.grad_norm, r.flux}) {
    s += format_double(x);
    s += ',';
  }
  s += std::to_string(r.vortex_total);
  return s;
}

/// Streams records to a CSV file as they are produced.
class SeriesWriter {
 public:
  explicit SeriesWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open series file '" + path + "' for writing");
    out_ << kSeriesHeader << '\n';
  }
  void append(const DiagnosticsRecord& r) {
    out_ << series_row(r) << '\n';
    if (!out_) throw IoError("write failed on '" + path_ + "'");
  }
  void flush() {
    out_.flush();
    if (!out_) throw IoError("write failed on '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

inline void write_series(const std::string& path, const std::vector<DiagnosticsRecord>& series) {
  SeriesWriter w(path);
  for (const auto& r : series) w.append(r);
  w.flush();
}

/// Column-oriented view of a series CSV.
struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // values[column][row]

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) return values[c];
    throw ConfigError("series has no column '" + name + "'");
  }
  std::size_t rows() const { return values.empty() ? 0 : values[0].size(); }
};

inline SeriesTable read_series(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open series file '" + path + "'");
  SeriesTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "': empty series file");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) t.columns.push_back(name);
  }
  if (t.columns.empty() || t.columns[0] != "t") throw FormatError("'" + path + "': header must start with 't'");
  t.values.assign(t.columns.size(), {});
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= t.columns.size())
        throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": too many fields");
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0')
        throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      t.values[c++].push_back(x);
    }
    if (c != t.columns.size())
      throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                        std::to_string(t.columns.size()) + " fields");
  }
  return t;
}

/// State plus the metadata needed to rebuild geometry and bundle.
struct Snapshot {
  int N = 0;
  double L1 = 0.0, L2 = 0.0;
  int n1 = 0, n2 = 0;
  EnergyForm energy = EnergyForm::Bogomolny;
  RealField rho;
  FlowState state;
};

inline constexpr int kSnapshotVersion = 1;

namespace detail {

inline void put_array(std::ostream& out, const double* p, std::size_t n) {
  std::vector<unsigned char> buf(n * 8);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t b = std::bit_cast<std::uint64_t>(p[k]);
    for (int byte = 0; byte < 8; ++byte) buf[k * 8 + byte] = static_cast<unsigned char>(b >> (8 * byte));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline void get_array(const std::string& data, std::size_t& pos, double* p, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t b = 0;
    for (int byte = 0; byte < 8; ++byte)
      b |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + k * 8 + byte])) << (8 * byte);
    p[k] = std::bit_cast<double>(b);
  }
  pos += n * 8;
}

}  // namespace detail

/// One JSON header line, then little-endian binary64 arrays rho, A1, A2,
/// Re Phi, Im Phi, row-major with x^2 outer.
inline void write_snapshot(const std::string& path, const FlowState& s, const TorusGeometry& geom,
                           const BundleConnection& bundle, EnergyForm energy) {
  nlohmann::json h;
  h["format"] = "vortexflow-snapshot";
  h["version"] = kSnapshotVersion;
  h["N"] = bundle.degree();
  h["L1"] = geom.L1();
  h["L2"] = geom.L2();
  h["n1"] = geom.n1();
  h["n2"] = geom.n2();
  h["t"] = s.t;
  h["energy"] = to_string(energy);
  h["endianness"] = "little";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open snapshot '" + path + "' for writing");
  out << h.dump() << '\n';
  const std::size_t n = geom.sites();
  std::vector<double> re(n), im(n);
  for (std::size_t k = 0; k < n; ++k) {
    re[k] = s.phi[k].real();
    im[k] = s.phi[k].imag();
  }
  detail::put_array(out, geom.rho().data(), n);
  detail::put_array(out, s.A.a1.data(), n);
  detail::put_array(out, s.A.a2.data(), n);
  detail::put_array(out, re.data(), n);
  detail::put_array(out, im.data(), n);
  out.flush();
  if (!out) throw IoError("write failed on snapshot '" + path + "'");
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto nl = data.find('\n');
  if (nl == std::string::npos) throw FormatError("'" + path + "': missing snapshot header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(data.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': bad snapshot header: " + e.what());
  }
  Snapshot snap;
  try {
    if (h.at("format").get<std::string>() != "vortexflow-snapshot")
      throw FormatError("'" + path + "': not a vortexflow snapshot");
    if (h.at("version").get<int>() != kSnapshotVersion)
      throw FormatError("'" + path + "': unsupported snapshot version");
    if (h.at("endianness").get<std::string>() != "little")
      throw FormatError("'" + path + "': unsupported endianness tag");
    snap.N = h.at("N").get<int>();
    snap.L1 = h.at("L1").get<double>();
    snap.L2 = h.at("L2").get<double>();
    snap.n1 = h.at("n1").get<int>();
    snap.n2 = h.at("n2").get<int>();
    const std::string e = h.at("energy").get<std::string>();
    if (e == "bogomolny") snap.energy = EnergyForm::Bogomolny;
    else if (e == "direct") snap.energy = EnergyForm::Direct;
    else throw FormatError("'" + path + "': unknown energy form '" + e + "'");
    snap.state.t = h.at("t").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': bad snapshot header: " + e.what());
  }
  if (snap.n1 < TorusGeometry::kMinResolution || snap.n2 < TorusGeometry::kMinResolution ||
      snap.n1 > (1 << 16) || snap.n2 > (1 << 16) || snap.N < 0)
    throw FormatError("'" + path + "': header values out of range");
  const std::size_t n = static_cast<std::size_t>(snap.n1) * snap.n2;
  if (data.size() - (nl + 1) != 5 * n * 8)
    throw FormatError("'" + path + "': expected " + std::to_string(5 * n * 8) + " bytes of field data, found " +
                      std::to_string(data.size() - (nl + 1)));
  std::size_t pos = nl + 1;
  snap.rho = RealField(snap.n1, snap.n2);
  snap.state = FlowState(snap.n1, snap.n2);
  snap.state.t = h.at("t").get<double>();
  std::vector<double> re(n), im(n);
  detail::get_array(data, pos, snap.rho.data(), n);
  detail::get_array(data, pos, snap.state.A.a1.data(), n);
  detail::get_array(data, pos, snap.state.A.a2.data(), n);
  detail::get_array(data, pos, re.data(), n);
  detail::get_array(data, pos, im.data(), n);
  for (std::size_t k = 0; k < n; ++k) snap.state.phi[k] = complex(re[k], im[k]);
  return snap;
}

inline TorusGeometry snapshot_geometry(const Snapshot& s) {
  return TorusGeometry(s.L1, s.L2, s.n1, s.n2, std::vector<double>(s.rho.begin(), s.rho.end()));
}

}  // namespace vflow
