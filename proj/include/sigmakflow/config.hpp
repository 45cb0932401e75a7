#pragma once
// Experiment configuration: a plain-text file of [section] headers and
// key = value lines. '#' starts a comment. Unknown sections or keys are errors.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "sigmakflow/errors.hpp"
#include "sigmakflow/flow.hpp"
#include "sigmakflow/symfunc.hpp"

namespace sigmak {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"check-condition-a", "flow-dual",       "flow-normalized",
                                              "flow-primal-radial", "expander-radial", "expander-limit",
                                              "legendre",          "diagnose",        "compare-exact"};
  return names;
}

enum class InitialKind {
  hyperboloid,  ///< u0 = c + sqrt(rho^2 + |x|^2); its dual is -rho w* - c
  anisotropic,  ///< u0* = -rho w* - c - amp (xi1^2 - xi2^2), trace c + amp cos 2 theta
  snapshot,     ///< field read from a snapshot file
};

struct InitialSpec {
  InitialKind kind = InitialKind::hyperboloid;
  double rho = 2.0;
  double c = 1.0;
  double amp = 0.0;
  std::string path;
};

struct ExperimentConfig {
  std::string subcommand;
  SpeedParams params;

  std::string geometry = "radial";  ///< radial | ball2d
  double h = 1.0 / 128.0;
  double r = 0.9;   ///< dual ball radius
  double R = 10.0;  ///< primal outer radius

  InitialSpec initial;

  Formulation formulation = Formulation::dual;  ///< compare-exact: dual or primalRadial
  double tEnd = 1.0;
  double tauMax = 20.0;
  double tol = 1e-6;  ///< stationary tolerance on sup |H~|
  StepOptions step;
  long snapshotEvery = 0;  ///< steps between stored snapshots; 0 keeps the final state only
  double expanderC = 1.0;
  double shootingR = 50.0;
  double declaredC = 1.0;
  double exactTol = 5e-3;

  std::string outDir = "out";
  bool writeSnapshots = true;

  std::vector<std::string> monitors;
  double barrierTol = 1e-8;
  double residualTol = 1e-8;
  double extremumTol = 1e-6;
  double convergenceTol = 1e-3;
  double compactFraction = 0.9;
  double phiC = 3.0;
  double kappaCeiling = 10.0;
  double beta = 1.5;

  int threads = 0;  ///< 0 leaves the runtime default
};

/// Raw sections; values keep their text form.
using ConfigSections = std::map<std::string, std::map<std::string, std::string>>;

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline ConfigSections parse_config_text(const std::string& text) {
  static const std::map<std::string, std::set<std::string>> allowed{
      {"params", {"n", "k", "alpha"}},
      {"grid", {"geometry", "h", "r", "R"}},
      {"initial", {"kind", "rho", "c", "amp", "path"}},
      {"run", {"formulation", "t_end", "tau_max", "tol", "scheme", "cfl", "snapshot_every", "expander_c", "shooting_R", "declared_c",
               "exact_tol"}},
      {"output", {"dir", "snapshots"}},
      {"monitors", {"list", "barrier_tol", "residual_tol", "extremum_tol", "convergence_tol", "compact_fraction",
                    "phi_c", "kappa_ceiling", "beta"}},
  };
  ConfigSections out;
  std::istringstream is(text);
  std::string section;
  int lineNo = 0;
  for (std::string raw; std::getline(is, raw);) {
    ++lineNo;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineNo) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!allowed.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside any section");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!allowed.at(section).count(key)) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (out[section].count(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    out[section][key] = value;
  }
  return out;
}

namespace detail {

inline double to_number(const std::string& key, const std::string& v) {
  // fractions such as 1/128 are accepted for grid spacings
  const auto slash = v.find('/');
  try {
    size_t used = 0;
    if (slash != std::string::npos) {
      const double a = std::stod(v.substr(0, slash)), b = std::stod(v.substr(slash + 1), &used);
      if (used != v.size() - slash - 1 || b == 0.0) throw std::invalid_argument(v);
      return a / b;
    }
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace detail

/// Builds and validates the configuration. OUTPUT_DIR, when set, replaces [output] dir.
inline ExperimentConfig make_config(const std::string& subcommand, const ConfigSections& sec) {
  bool known = false;
  for (const auto& s : subcommands()) known = known || s == subcommand;
  if (!known) throw ConfigError("unknown subcommand '" + subcommand + "'");
  ExperimentConfig c;
  c.subcommand = subcommand;
  auto get = [&](const char* s, const char* k) -> const std::string* {
    const auto it = sec.find(s);
    if (it == sec.end()) return nullptr;
    const auto jt = it->second.find(k);
    return jt == it->second.end() ? nullptr : &jt->second;
  };
  auto num = [&](const char* s, const char* k, double& dst) {
    if (const auto* v = get(s, k)) dst = detail::to_number(k, *v);
  };
  auto integer = [&](const char* s, const char* k, auto& dst) {
    if (const auto* v = get(s, k)) {
      const double x = detail::to_number(k, *v);
      if (x != std::floor(x)) throw ConfigError(std::string("key '") + k + "': expected an integer");
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(x);
    }
  };

  integer("params", "n", c.params.n);
  integer("params", "k", c.params.k);
  num("params", "alpha", c.params.alpha);
  try {
    c.params.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[params] ") + e.what());
  }

  if (const auto* v = get("grid", "geometry")) c.geometry = *v;
  if (c.geometry != "radial" && c.geometry != "ball2d") throw ConfigError("[grid] geometry must be radial or ball2d");
  if (c.geometry == "ball2d" && c.params.n != 2) throw ConfigError("[grid] ball2d needs n = 2");
  num("grid", "h", c.h);
  num("grid", "r", c.r);
  num("grid", "R", c.R);
  if (!(c.h > 0.0)) throw ConfigError("[grid] h must be > 0");
  if (!(c.r > 0.0 && c.r < 1.0)) throw ConfigError("[grid] r must lie in (0, 1)");
  if (!(c.R > 0.0)) throw ConfigError("[grid] R must be > 0");

  if (const auto* v = get("initial", "kind")) {
    if (*v == "hyperboloid") c.initial.kind = InitialKind::hyperboloid;
    else if (*v == "anisotropic") c.initial.kind = InitialKind::anisotropic;
    else if (*v == "snapshot") c.initial.kind = InitialKind::snapshot;
    else throw ConfigError("[initial] kind must be hyperboloid, anisotropic or snapshot");
  }
  num("initial", "rho", c.initial.rho);
  num("initial", "c", c.initial.c);
  num("initial", "amp", c.initial.amp);
  if (const auto* v = get("initial", "path")) c.initial.path = *v;
  if (!(c.initial.rho > 0.0)) throw ConfigError("[initial] rho must be > 0");
  if (c.initial.kind == InitialKind::snapshot && c.initial.path.empty()) throw ConfigError("[initial] snapshot needs path");
  if (c.initial.kind == InitialKind::anisotropic) {
    if (c.geometry != "ball2d") throw ConfigError("[initial] anisotropic data needs geometry = ball2d");
    if (!(c.initial.rho > 2.0 * std::abs(c.initial.amp))) throw ConfigError("[initial] anisotropic data needs rho > 2 |amp|");
  }

  if (const auto* v = get("run", "formulation")) {
    if (*v == "dual") c.formulation = Formulation::dual;
    else if (*v == "normalized") c.formulation = Formulation::normalized;
    else if (*v == "primalRadial") c.formulation = Formulation::primalRadial;
    else throw ConfigError("[run] formulation must be dual, normalized or primalRadial");
  }
  num("run", "t_end", c.tEnd);
  num("run", "tau_max", c.tauMax);
  num("run", "tol", c.tol);
  if (const auto* v = get("run", "scheme")) {
    if (*v == "euler") c.step.scheme = Scheme::euler;
    else if (*v == "rk2") c.step.scheme = Scheme::rk2;
    else throw ConfigError("[run] scheme must be euler or rk2");
  }
  num("run", "cfl", c.step.cflFactor);
  integer("run", "snapshot_every", c.snapshotEvery);
  num("run", "expander_c", c.expanderC);
  num("run", "shooting_R", c.shootingR);
  num("run", "declared_c", c.declaredC);
  num("run", "exact_tol", c.exactTol);
  if (!(c.tEnd >= 0.0)) throw ConfigError("[run] t_end must be >= 0");
  if (!(c.step.cflFactor > 0.0 && c.step.cflFactor <= 0.5)) throw ConfigError("[run] cfl must lie in (0, 0.5]");
  if (c.snapshotEvery < 0) throw ConfigError("[run] snapshot_every must be >= 0");
  if (!(c.expanderC >= 0.0)) throw ConfigError("[run] expander_c must be >= 0");

  if (const auto* v = get("output", "dir")) c.outDir = *v;
  if (const auto* v = get("output", "snapshots")) c.writeSnapshots = detail::to_bool("snapshots", *v);
  if (const char* env = std::getenv("OUTPUT_DIR"); env && *env) c.outDir = env;

  if (const auto* v = get("monitors", "list")) {
    static const std::set<std::string> names{"comparison",  "boundary_extremum", "residual_sign",     "residual_history",
                                             "convergence", "phi_bounds",        "kappa_max",         "evolution_identity",
                                             "scaling_covariance", "flow_orbit", "domain_exhaustion"};
    std::istringstream ls(*v);
    for (std::string m; std::getline(ls, m, ',');) {
      m = trim(m);
      if (m.empty()) continue;
      if (!names.count(m)) throw ConfigError("[monitors] unknown monitor '" + m + "'");
      c.monitors.push_back(m);
    }
  }
  num("monitors", "barrier_tol", c.barrierTol);
  num("monitors", "residual_tol", c.residualTol);
  num("monitors", "extremum_tol", c.extremumTol);
  num("monitors", "convergence_tol", c.convergenceTol);
  num("monitors", "compact_fraction", c.compactFraction);
  num("monitors", "phi_c", c.phiC);
  num("monitors", "kappa_ceiling", c.kappaCeiling);
  num("monitors", "beta", c.beta);
  if (!(c.compactFraction > 0.0 && c.compactFraction <= 1.0)) throw ConfigError("[monitors] compact_fraction must lie in (0, 1]");
  if (!(c.beta > 0.0)) throw ConfigError("[monitors] beta must be > 0");
  return c;
}

inline ExperimentConfig load_config(const std::string& subcommand, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return make_config(subcommand, parse_config_text(ss.str()));
}

inline bool wants(const ExperimentConfig& c, const std::string& monitor) {
  return std::find(c.monitors.begin(), c.monitors.end(), monitor) != c.monitors.end();
}

}  // namespace sigmak
