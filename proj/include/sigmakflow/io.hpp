#pragma once
// Text snapshots, monitor CSV/JSON and gnuplot scripts.
//
// Snapshot layout: one header line
//   sigmakflow-snapshot formulation=dual geometry=radial n=2 k=1 alpha=1 r=0.9 h=0.0078125 t=1 tau=0.34 size=116
// followed by `size` values, one per line, printed with 17 significant digits
// ("nan" at nodes outside a ball mask).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sigmakflow/diagnostics.hpp"
#include "sigmakflow/errors.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/flow.hpp"

namespace sigmak {

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw IoError("trailing characters in number: '" + s + "'");
  return v;
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "dual") return Formulation::dual;
  if (s == "normalized") return Formulation::normalized;
  if (s == "primalRadial") return Formulation::primalRadial;
  throw IoError("unknown formulation '" + s + "'");
}

using AnyField = std::variant<RadialField, BallField2D>;

struct SnapshotRecord {
  Formulation formulation = Formulation::dual;
  SpeedParams params;
  double r = 0.0;  ///< ball radius (dual) or outer radius (primal)
  double t = 0.0;
  double tau = 0.0;
  AnyField field;
};

inline void write_snapshot(std::ostream& os, const SnapshotRecord& rec) {
  const bool radial = std::holds_alternative<RadialField>(rec.field);
  const auto& values = radial ? std::get<RadialField>(rec.field).values : std::get<BallField2D>(rec.field).values;
  const double h = radial ? std::get<RadialField>(rec.field).h : std::get<BallField2D>(rec.field).h;
  os << "sigmakflow-snapshot formulation=" << to_string(rec.formulation) << " geometry=" << (radial ? "radial" : "ball2d")
     << " n=" << rec.params.n << " k=" << rec.params.k << " alpha=" << fmt17(rec.params.alpha) << " r=" << fmt17(rec.r)
     << " h=" << fmt17(h) << " t=" << fmt17(rec.t) << " tau=" << fmt17(rec.tau) << " size=" << values.size() << '\n';
  for (double v : values) os << fmt17(v) << '\n';
}

inline SnapshotRecord read_snapshot(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("snapshot: missing header");
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "sigmakflow-snapshot") throw IoError("snapshot: bad magic '" + magic + "'");
  std::map<std::string, std::string> kv;
  for (std::string tok; hs >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError("snapshot: malformed header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"formulation", "geometry", "n", "k", "alpha", "r", "h", "t", "tau", "size"})
    if (!kv.count(key)) throw IoError(std::string("snapshot: header lacks ") + key);
  SnapshotRecord rec;
  rec.formulation = parse_formulation(kv["formulation"]);
  rec.params.n = std::stoi(kv["n"]);
  rec.params.k = std::stoi(kv["k"]);
  rec.params.alpha = parse_double(kv["alpha"]);
  rec.params.validate();
  rec.r = parse_double(kv["r"]);
  rec.t = parse_double(kv["t"]);
  rec.tau = parse_double(kv["tau"]);
  const double h = parse_double(kv["h"]);
  const size_t size = std::stoul(kv["size"]);
  std::vector<double> values;
  values.reserve(size);
  for (std::string line; values.size() < size && std::getline(is, line);) {
    if (line.empty()) continue;
    values.push_back(parse_double(line));
  }
  if (values.size() != size) throw IoError("snapshot: expected " + std::to_string(size) + " values");
  if (kv["geometry"] == "radial") {
    RadialField f;
    f.h = h;
    f.values = std::move(values);
    rec.field = std::move(f);
  } else if (kv["geometry"] == "ball2d") {
    BallField2D f = BallField2D::make(rec.r, h);
    if (f.values.size() != size) throw IoError("snapshot: ball grid size does not match r and h");
    f.values = std::move(values);
    rec.field = std::move(f);
  } else {
    throw IoError("snapshot: unknown geometry '" + kv["geometry"] + "'");
  }
  return rec;
}

inline void save_snapshot(const std::filesystem::path& path, const SnapshotRecord& rec) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  write_snapshot(os, rec);
  if (!os) throw IoError("write failed: " + path.string());
}

inline SnapshotRecord load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  return read_snapshot(is);
}

template <class Field>
SnapshotRecord make_record(const FlowState<Field>& st, double r) {
  return SnapshotRecord{st.formulation, st.params, r, st.t, st.tau, st.field};
}

inline void write_series_csv(std::ostream& os, const MonitorSeries& s) {
  os << "time,value\n";
  for (size_t i = 0; i < s.times.size(); ++i) os << fmt17(s.times[i]) << ',' << fmt17(s.values[i]) << '\n';
}

/// Non-finite numbers become strings so the document stays valid JSON.
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return fmt17(v);
}

inline nlohmann::json verdict_json(const MonitorSeries& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["predicate"] = to_string(s.predicate);
  j["threshold"] = json_number(s.threshold);
  j["samples"] = s.values.size();
  j["pass"] = s.pass;
  if (!s.values.empty()) {
    j["first"] = json_number(s.values.front());
    j["last"] = json_number(s.values.back());
  }
  if (!s.notice.empty()) j["notice"] = s.notice;
  return j;
}

inline std::string series_file_name(const MonitorSeries& s, size_t index) {
  std::string clean;
  for (char ch : s.name) clean += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') ? ch : '_';
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%02zu_", index);
  return prefix + clean + ".csv";
}

struct PlotResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// One CSV per series plus plot.gp referencing them. Series whose values are
/// all positive are plotted on a log scale.
inline PlotResult emit_plot_data(const std::vector<MonitorSeries>& series, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  PlotResult res;
  std::ostringstream script;
  script << "set datafile separator ','\nset key autotitle columnhead\n";
  if (series.empty()) res.warnings.push_back("emit_plot_data: no series, script has no plots");
  for (size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const auto name = series_file_name(s, i);
    std::ofstream os(dir / name);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    write_series_csv(os, s);
    res.files.push_back(dir / name);
    const bool positive = !s.values.empty() && std::all_of(s.values.begin(), s.values.end(), [](double v) { return v > 0; });
    script << "\nset title '" << s.name << "'\n" << (positive ? "set logscale y\n" : "unset logscale y\n")
           << "plot '" << name << "' using 1:2 with linespoints title '" << s.name << "'\n";
  }
  const auto gp = dir / "plot.gp";
  std::ofstream os(gp);
  if (!os) throw IoError("cannot write " + gp.string());
  os << script.str();
  res.files.push_back(gp);
  return res;
}

}  // namespace sigmak
