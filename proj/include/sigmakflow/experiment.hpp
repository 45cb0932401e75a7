#pragma once
// Subcommand driver. Every run writes into the output directory:
//   summary.json   parameters, results and monitor verdicts (reproducible bitwise)
//   timing.json    wall time, kept apart so summary.json stays reproducible
//   *.snap         snapshots (see io.hpp)
//   monitors/      one CSV per monitor series plus plot.gp
// Exit status: 0 when the run succeeded and every monitor passed, 1 on a failed
// monitor or solver error (the last state is dumped to dump.snap), 2 on bad config.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sigmakflow/config.hpp"
#include "sigmakflow/diagnostics.hpp"
#include "sigmakflow/errors.hpp"
#include "sigmakflow/expander.hpp"
#include "sigmakflow/flow.hpp"
#include "sigmakflow/geometry.hpp"
#include "sigmakflow/io.hpp"
#include "sigmakflow/legendre.hpp"

namespace sigmak {

struct ExperimentResult {
  int exitCode = 0;
  nlohmann::json summary;
  std::vector<MonitorSeries> series;
  std::vector<std::string> warnings;
  std::string message;
  double wallSeconds = 0.0;
};

namespace detail {

using json = nlohmann::json;

struct Run {
  const ExperimentConfig& cfg;
  std::filesystem::path out;
  ExperimentResult res;
  int snapshotCount = 0;
  std::function<void()> dump;  ///< writes the current state on solver failure
  bool dumped = false;

  /// Runs body; on a solver error dumps the state through `dump` and rethrows.
  template <class Body>
  void guarded(Body&& body) {
    try {
      body();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      if (dump) {
        try {
          dump();
          dumped = true;
        } catch (const std::exception&) {
        }
      }
      dump = nullptr;
      throw;
    }
    dump = nullptr;
  }

  void add(MonitorSeries s) { res.series.push_back(std::move(s)); }

  template <class Field>
  void snapshot(const FlowState<Field>& st, double r, const std::string& name = "") {
    if (!cfg.writeSnapshots) return;
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%04d.snap", snapshotCount++);
    save_snapshot(out / (name.empty() ? std::string(buf) : name), make_record(st, r));
  }
};

inline double primal_u0(const InitialSpec& in, double x) { return in.c + std::sqrt(in.rho * in.rho + x * x); }

inline double dual_u0(const InitialSpec& in, double x, double y) {
  const double ws = std::sqrt(1.0 - x * x - y * y);
  return -in.rho * ws - in.c - in.amp * (x * x - y * y);
}

inline RadialField primal_initial(const ExperimentConfig& c) {
  if (c.initial.kind == InitialKind::snapshot) {
    auto rec = load_snapshot(c.initial.path);
    if (!std::holds_alternative<RadialField>(rec.field)) throw ConfigError("[initial] snapshot must be radial");
    return std::get<RadialField>(rec.field);
  }
  if (c.initial.kind != InitialKind::hyperboloid) throw ConfigError("[initial] primal runs need hyperboloid data");
  return RadialField::sample(c.R, RadialField::intervals_for(c.R, c.h), [&](double x) { return primal_u0(c.initial, x); });
}

inline RadialField dual_initial_radial(const ExperimentConfig& c) {
  if (c.initial.kind == InitialKind::snapshot) {
    auto rec = load_snapshot(c.initial.path);
    if (!std::holds_alternative<RadialField>(rec.field)) throw ConfigError("[initial] snapshot must be radial");
    return std::get<RadialField>(rec.field);
  }
  return RadialField::sample(c.r, RadialField::intervals_for(c.r, c.h), [&](double s) { return dual_u0(c.initial, s, 0.0); });
}

inline BallField2D dual_initial_ball(const ExperimentConfig& c) {
  if (c.initial.kind == InitialKind::snapshot) {
    auto rec = load_snapshot(c.initial.path);
    if (!std::holds_alternative<BallField2D>(rec.field)) throw ConfigError("[initial] snapshot must be ball2d");
    return std::get<BallField2D>(rec.field);
  }
  return BallField2D::sample(c.r, c.h, [&](double x, double y) { return dual_u0(c.initial, x, y); });
}

/// Dual of the radial self-expander with trace c on the nodes of `like`.
inline RadialField expander_dual_on(const ExpanderSolution& e, const RadialField& like) {
  return legendre_transform(e.profile, like.outer_radius(), like.intervals());
}

inline BallField2D expander_dual_on(const ExpanderSolution& e, const BallField2D& like) {
  // ring nodes sit below r + sqrt(2) h < 1
  const double outer = std::min(like.r + 2.0 * like.h, 0.5 * (1.0 + like.r + std::sqrt(2.0) * like.h));
  const RadialField rad = legendre_transform(e.profile, outer, RadialField::intervals_for(outer, like.h / 4));
  BallField2D b = like;
  for (size_t i = 0; i < b.values.size(); ++i)
    if (b.cells[i] != Cell::outside) b.values[i] = rad.interpolate(node_radius(b, i));
  return b;
}

inline json params_json(const ExperimentConfig& c) {
  return json{{"n", c.params.n}, {"k", c.params.k}, {"alpha", c.params.alpha}, {"geometry", c.geometry},
              {"h", c.h},        {"r", c.r},        {"R", c.R}};
}

inline double center_value(const RadialField& f) { return f.values.front(); }
inline double center_value(const BallField2D& f) { return f.at(0, 0); }

inline bool constant_trace(const ExperimentConfig& c) {
  return c.initial.kind == InitialKind::hyperboloid;
}

template <class Field>
void flow_dual(Run& run, Field initial) {
  const auto& c = run.cfg;
  auto st = make_state(initial, Formulation::dual, c.params);
  run.dump = [&] { save_snapshot(run.out / "dump.snap", make_record(st, c.r)); };
  const bool barrier = wants(c, "comparison");
  if (barrier && !constant_trace(c)) throw ConfigError("comparison monitor needs hyperboloid initial data (constant trace)");
  Field upper;
  if (barrier) upper = expander_dual_on(solve_radial_shooting(c.params, c.initial.c), initial);
  ComparisonAccumulator<Field> sandwich("comparison", c.barrierTol);
  BoundaryExtremumMonitor<Field> extremum(initial, c.params, c.extremumTol);
  if (barrier) sandwich.add_scaled_sandwich(0.0, initial, st.field, upper, 1.0);
  run.snapshot(st, c.r);
  RunOptions opt;
  opt.step = c.step;
  long steps = 0;
  RunSummary sum;
  run.guarded([&] {
    sum = run_until(st, c.tEnd, opt, [&](const FlowState<Field>& s, const StepReport& rep) {
      ++steps;
      if (wants(c, "boundary_extremum")) extremum.observe_rates(rep.clockBefore, rep.rates);
      if (barrier) sandwich.add_scaled_sandwich(s.t, initial, s.field, upper, scale_factor(s.t, c.params.alpha));
      if (c.snapshotEvery > 0 && steps % c.snapshotEvery == 0) run.snapshot(s, c.r);
    });
  });
  if (wants(c, "boundary_extremum")) {
    extremum.observe(st);
    run.add(extremum.finish());
  }
  if (barrier) run.add(sandwich.finish());
  run.snapshot(st, c.r, "final.snap");
  run.res.summary["result"] = {{"t", st.t},
                               {"tau", st.tau},
                               {"steps", sum.steps},
                               {"minEigenvalue", sum.minEigenvalue},
                               {"maxCflRatio", sum.maxCflRatio},
                               {"centerValue", center_value(st.field)}};
}

template <class Field>
void flow_normalized(Run& run, Field initial, bool limitOnly) {
  const auto& c = run.cfg;
  auto st0 = make_state(initial, Formulation::normalized, c.params);
  RunOptions opt;
  opt.step = c.step;
  const bool conv = wants(c, "convergence") && !limitOnly;
  if (conv && !constant_trace(c)) throw ConfigError("convergence monitor needs hyperboloid initial data (constant trace)");
  Field target;
  if (conv) target = expander_dual_on(solve_radial_shooting(c.params, c.initial.c), initial);
  MonitorSeries dist;
  dist.name = "convergence";
  dist.predicate = Predicate::decreasingTo;
  dist.threshold = c.convergenceTol;
  dist.transient = 0.1;
  const long stride = c.snapshotEvery > 0 ? c.snapshotEvery : 100;
  long probes = 0;
  // the integrator owns its state, so a failure dumps the last sampled copy
  FlowState<Field> sampled = st0;
  run.dump = [&] { save_snapshot(run.out / "dump.snap", make_record(sampled, c.r)); };
  StationaryResult<Field> res;
  run.guarded([&] {
  res = run_to_stationary(st0, c.tol, c.tauMax, opt, [&](const FlowState<Field>& s, const StepReport&) {
    if (probes % stride == 0) sampled = s;
    if (conv && probes % stride == 0) {
      double d = 0.0;
      for (size_t i = 0; i < s.field.values.size(); ++i)
        if (usable(s.field, i) && node_radius(s.field, i) <= c.compactFraction * c.r)
          d = std::max(d, std::abs(s.field.values[i] - target.values[i]));
      dist.times.push_back(s.tau);
      dist.values.push_back(d);
    }
    ++probes;
  });
  });
  run.snapshot(res.state, c.r, "final.snap");
  if (wants(c, "residual_sign")) run.add(residual_sign_check(res.tau, res.minResidual, c.residualTol));
  if (wants(c, "residual_history")) run.add(residual_history_check(res.tau, res.residual, c.tol));
  if (conv) {
    // the last probed state is the returned one
    double d = 0.0;
    for (size_t i = 0; i < res.state.field.values.size(); ++i)
      if (usable(res.state.field, i) && node_radius(res.state.field, i) <= c.compactFraction * c.r)
        d = std::max(d, std::abs(res.state.field.values[i] - target.values[i]));
    if (dist.times.empty() || res.state.tau > dist.times.back()) {
      dist.times.push_back(res.state.tau);
      dist.values.push_back(d);
    }
    run.add(finalize(dist));
  }
  const double supH = res.residual.empty() ? 0.0 : res.residual.back();
  run.res.summary["result"] = {{"converged", res.converged},
                               {"tau", res.state.tau},
                               {"steps", res.steps},
                               {"finalResidual", supH},
                               {"minResidual", *std::min_element(res.minResidual.begin(), res.minResidual.end())}};
  if constexpr (std::is_same_v<Field, RadialField>) {
    run.res.summary["result"]["mu"] = -res.state.field.values[0];
    if (limitOnly) {
      const RadialField& lim = res.state.field;
      const double target = c.initial.kind == InitialKind::hyperboloid ? dual_u0(c.initial, c.r, 0.0) : lim.values.back();
      ShootingOptions so;
      so.hOut = lim.h;
      const ExpanderSolution ref = solve_radial_shooting_dual(c.params, c.r, target, so);
      const double reach = 0.98 * gradient_image_radius(lim);
      const int n = RadialField::intervals_for(reach, c.h);
      const RadialField primal = legendre_inverse(lim, reach, n);
      double diff = 0.0;
      for (int i = 0; i <= n; ++i) diff = std::max(diff, std::abs(primal.values[i] - ref.profile.interpolate(primal.radius_at(i))));
      run.res.summary["result"]["shootingMu"] = ref.mu;
      run.res.summary["result"]["primalSupDifference"] = diff;
      run.res.summary["result"]["primalRadius"] = reach;
      MonitorSeries agree;
      agree.name = "limit_vs_shooting";
      agree.predicate = Predicate::allAtMost;
      agree.threshold = c.convergenceTol;
      agree.times = {res.state.tau};
      agree.values = {diff};
      run.add(finalize(agree));
    }
  } else {
    run.res.summary["result"]["centerValue"] = center_value(res.state.field);
  }
  if (!res.converged) {
    run.res.exitCode = 1;
    run.res.message = "run_to_stationary did not reach tol within tau_max";
  }
}

inline BoundaryProvider self_similar_boundary(const RadialField& u0, const SpeedParams& p) {
  const double R = u0.outer_radius();
  return [u0, p, R](double t) {
    const double A = scale_factor(t, p.alpha);
    return A * u0.interpolate(R / A);
  };
}

inline void flow_primal(Run& run) {
  const auto& c = run.cfg;
  const RadialField u0 = primal_initial(c);
  auto st = make_state(u0, Formulation::primalRadial, c.params);
  run.dump = [&] { save_snapshot(run.out / "dump.snap", make_record(st, u0.outer_radius())); };
  const BoundaryProvider bp = self_similar_boundary(u0, c.params);
  std::vector<Snapshot<RadialField>> series{{0.0, u0}};
  RunOptions opt;
  opt.step = c.step;
  long steps = 0;
  run.snapshot(st, u0.outer_radius());
  const long stride = c.snapshotEvery > 0 ? c.snapshotEvery : 200;
  RunSummary sum;
  run.guarded([&] {
    sum = run_until(
        st, c.tEnd, opt,
        [&](const FlowState<RadialField>& s, const StepReport&) {
          if (++steps % stride == 0) {
            series.push_back({s.t, s.field});
            if (c.snapshotEvery > 0) run.snapshot(s, u0.outer_radius());
          }
        },
        &bp);
  });
  if (series.back().t < st.t) series.push_back({st.t, st.field});
  run.snapshot(st, u0.outer_radius(), "final.snap");
  if (wants(c, "phi_bounds")) run.add(phi_bounds_check(series, c.params, c.phiC));
  if (wants(c, "kappa_max")) run.add(kappa_max_monitor(series, c.params, c.phiC, c.kappaCeiling));
  run.res.summary["result"] = {{"t", st.t}, {"steps", sum.steps}, {"centerValue", st.field.values[0]}};
}

inline void check_condition_a(Run& run) {
  const auto& c = run.cfg;
  const auto rep = condition_a_check(primal_initial(c), c.params, c.declaredC);
  run.res.summary["result"] = {{"holds", rep.holds},
                               {"spacelike", rep.spacelike},
                               {"strictlyConvex", rep.strictlyConvex},
                               {"asymptoticPhiMean", rep.asymptoticPhiMean},
                               {"c0", rep.c0},
                               {"bigC", rep.bigC},
                               {"minSupport", rep.minSupport},
                               {"declaredC", rep.declaredC},
                               {"failure", rep.failure}};
  if (!rep.holds) {
    run.res.exitCode = 1;
    run.res.message = "condition A does not hold: " + rep.failure;
  }
}

inline void expander_radial(Run& run) {
  const auto& c = run.cfg;
  ShootingOptions o;
  o.R = c.shootingR;
  o.hOut = c.h;
  const ExpanderSolution e = solve_radial_shooting(c.params, c.expanderC, o);
  if (c.writeSnapshots)
    save_snapshot(run.out / "profile.snap", SnapshotRecord{Formulation::primalRadial, c.params, e.R, 0.0, 0.0, e.profile});
  run.res.summary["result"] = {{"mu", e.mu},
                               {"c", e.c},
                               {"residual", e.residual},
                               {"tailDifference", e.tailDifference},
                               {"R", e.R},
                               {"converged", e.converged},
                               {"iterations", e.iterations},
                               {"hyperboloidRadius", hyperboloid_radius(c.params)}};
  if (!e.converged) {
    run.res.exitCode = 1;
    run.res.message = "shooting did not converge";
  }
}

inline void legendre_cmd(Run& run) {
  const auto& c = run.cfg;
  if (c.initial.kind != InitialKind::hyperboloid) throw ConfigError("legendre needs hyperboloid initial data");
  const RadialField u = primal_initial(c);
  const int n = RadialField::intervals_for(c.r, c.h);
  const RadialField us = legendre_transform(u, c.r, n);
  double closed = 0.0;
  for (int i = 0; i <= n; ++i) closed = std::max(closed, std::abs(us.values[i] - dual_u0(c.initial, us.radius_at(i), 0.0)));
  // the primal radius whose slope is r
  const double reach = 0.98 * c.initial.rho * c.r / std::sqrt(1.0 - c.r * c.r);
  const int m = RadialField::intervals_for(reach, c.h);
  const RadialField back = legendre_inverse(us, reach, m);
  double inv = 0.0;
  for (int i = 0; i <= m; ++i) inv = std::max(inv, std::abs(back.values[i] - primal_u0(c.initial, back.radius_at(i))));
  if (c.writeSnapshots) {
    save_snapshot(run.out / "dual.snap", SnapshotRecord{Formulation::dual, c.params, c.r, 0.0, 0.0, us});
    save_snapshot(run.out / "involution.snap", SnapshotRecord{Formulation::primalRadial, c.params, reach, 0.0, 0.0, back});
  }
  run.res.summary["result"] = {{"closedFormError", closed}, {"involutionError", inv}, {"involutionRadius", reach}};
  MonitorSeries s;
  s.name = "legendre_involution";
  s.predicate = Predicate::allAtMost;
  s.threshold = 5.0 * c.h;
  s.times = {0.0};
  s.values = {inv};
  run.add(finalize(s));
}

inline void compare_exact(Run& run) {
  const auto& c = run.cfg;
  const double a = hyperboloid_radius(c.params);
  double err = 0.0;
  long steps = 0;
  RunOptions opt;
  opt.step = c.step;
  if (c.formulation == Formulation::primalRadial) {
    const int n = RadialField::intervals_for(c.R, c.h);
    auto st = make_state(RadialField::sample(c.R, n, [&](double x) { return std::sqrt(a * a + x * x); }),
                         Formulation::primalRadial, c.params);
    run.dump = [&] { save_snapshot(run.out / "dump.snap", make_record(st, c.R)); };
    const BoundaryProvider bp = [&](double t) {
      const double A = scale_factor(t, c.params.alpha);
      return std::sqrt(a * a * A * A + c.R * c.R);
    };
    run.guarded([&] { steps = run_until(st, c.tEnd, opt, &bp).steps; });
    const double A = scale_factor(st.t, c.params.alpha);
    for (int i = 0; i <= n; ++i)
      err = std::max(err, std::abs(st.field.values[i] - std::sqrt(a * a * A * A + st.field.radius_at(i) * st.field.radius_at(i))));
    run.snapshot(st, c.R, "final.snap");
  } else if (c.formulation == Formulation::dual) {
    auto exact = [&](double s2) { return -a * std::sqrt(1.0 - s2); };
    auto finish = [&](auto& st) {
      const double A = scale_factor(st.t, c.params.alpha);
      for (size_t i = 0; i < st.field.values.size(); ++i) {
        if (!usable(st.field, i)) continue;
        const double s = node_radius(st.field, i);
        err = std::max(err, std::abs(st.field.values[i] - A * exact(s * s)));
      }
      run.snapshot(st, c.r, "final.snap");
    };
    if (c.geometry == "radial") {
      auto st = make_state(RadialField::sample(c.r, RadialField::intervals_for(c.r, c.h), [&](double s) { return exact(s * s); }),
                           Formulation::dual, c.params);
      run.dump = [&] { save_snapshot(run.out / "dump.snap", make_record(st, c.r)); };
      run.guarded([&] { steps = run_until(st, c.tEnd, opt).steps; });
      finish(st);
    } else {
      auto st = make_state(BallField2D::sample(c.r, c.h, [&](double x, double y) { return exact(x * x + y * y); }),
                           Formulation::dual, c.params);
      run.dump = [&] { save_snapshot(run.out / "dump.snap", make_record(st, c.r)); };
      run.guarded([&] { steps = run_until(st, c.tEnd, opt).steps; });
      finish(st);
    }
  } else {
    throw ConfigError("compare-exact: [run] formulation must be dual or primalRadial");
  }
  run.res.summary["result"] = {{"supError", err}, {"steps", steps}, {"hyperboloidRadius", a}, {"t", c.tEnd}};
  MonitorSeries s;
  s.name = "exact_error";
  s.predicate = Predicate::allAtMost;
  s.threshold = c.exactTol;
  s.times = {c.tEnd};
  s.values = {err};
  run.add(finalize(s));
}

/// Radial primal diagnostics that need dedicated runs.
inline void diagnose(Run& run) {
  const auto& c = run.cfg;
  std::vector<std::string> list = c.monitors;
  if (list.empty()) list = {"evolution_identity", "scaling_covariance"};
  auto has = [&](const char* m) { return std::find(list.begin(), list.end(), m) != list.end(); };
  const double a = hyperboloid_radius(c.params);
  if (has("evolution_identity")) {
    // self-similar hyperboloid run; three snapshots around t_end / 2 on each of three grids
    std::vector<double> hs;
    std::vector<EvolutionResiduals> ladder;
    for (int level = 0; level < 3; ++level) {
      const int n = RadialField::intervals_for(c.R, c.h) << level;
      const double h = c.R / n, tm = 0.5 * c.tEnd, d = 2.0 * h;
      auto st = make_state(RadialField::sample(c.R, n, [&](double x) { return std::sqrt(a * a + x * x); }),
                           Formulation::primalRadial, c.params);
      const BoundaryProvider bp = [&](double t) {
        const double A = scale_factor(t, c.params.alpha);
        return std::sqrt(a * a * A * A + c.R * c.R);
      };
      RunOptions opt;
      opt.step = c.step;
      Snapshot<RadialField> snaps[3];
      for (int q = 0; q < 3; ++q) {
        run_until(st, tm + (q - 1) * d, opt, &bp);
        snaps[q] = {st.t, st.field};
      }
      hs.push_back(h);
      ladder.push_back(evolution_identity_residuals(snaps[0], snaps[1], snaps[2], c.params));
    }
    for (auto& s : evolution_identity_check(hs, ladder)) run.add(std::move(s));
  }
  if (has("scaling_covariance")) {
    const InitialSpec in = c.initial;
    auto jet = [&](double x) {
      const double q = std::sqrt(in.rho * in.rho + x * x);
      return RadialJet{in.c + q, x / q, in.rho * in.rho / (q * q * q)};
    };
    run.add(scaling_covariance_check(jet, c.beta, c.params, c.R));
  }
  if (has("flow_orbit")) {
    OrbitOptions o;
    o.beta = c.beta;
    o.h = c.h;
    o.tolerance = c.exactTol;
    o.run.step = c.step;
    const InitialSpec in = c.initial;
    run.add(flow_orbit_check([in](double x) { return primal_u0(in, x); }, c.params, o));
  }
  if (has("domain_exhaustion")) {
    const std::vector<double> radii{0.6, 0.75, 0.9};
    std::vector<std::pair<double, RadialField>> limits;
    for (double r : radii) {
      auto st = make_state(RadialField::sample(r, RadialField::intervals_for(r, c.h), [&](double s) { return dual_u0(c.initial, s, 0.0); }),
                           Formulation::normalized, c.params);
      RunOptions opt;
      opt.step = c.step;
      auto res = run_to_stationary(st, c.tol, c.tauMax, opt);
      limits.emplace_back(r, res.state.field);
    }
    const double inner = 0.5;
    std::vector<std::pair<double, RadialField>> head(limits.begin(), limits.end() - 1);
    run.add(domain_exhaustion_check(head, limits.back().second, inner, "domain_exhaustion"));
    json pairs = json::array();
    for (size_t i = 0; i < limits.size(); ++i)
      for (size_t j = i + 1; j < limits.size(); ++j)
        pairs.push_back({{"r1", limits[i].first}, {"r2", limits[j].first},
                         {"supDifference", dual_distance(limits[i].second, limits[j].second, inner)}});
    run.res.summary["result"]["exhaustionPairs"] = pairs;
  }
}

inline void write_outputs(Run& run) {
  auto& res = run.res;
  json mons = json::array();
  for (const auto& s : res.series) mons.push_back(verdict_json(s));
  res.summary["monitors"] = mons;
  const auto plot = emit_plot_data(res.series, run.out / "monitors");
  for (const auto& w : plot.warnings) res.warnings.push_back(w);
  res.summary["exitCode"] = res.exitCode;
  if (!res.message.empty()) res.summary["message"] = res.message;
  std::ofstream os(run.out / "summary.json");
  if (!os) throw IoError("cannot write summary.json");
  os << res.summary.dump(2) << '\n';
}

}  // namespace detail

/// Executes one subcommand. Never throws; failures are mapped to exit codes.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
  detail::Run run{cfg, std::filesystem::path(cfg.outDir), {}, 0, {}};
  run.res.summary["subcommand"] = cfg.subcommand;
  run.res.summary["params"] = detail::params_json(cfg);
  try {
    std::filesystem::create_directories(run.out);
  } catch (const std::exception& e) {
    run.res.exitCode = 1;
    run.res.message = std::string("cannot create output directory: ") + e.what();
    return run.res;
  }
  try {
    const std::string& s = cfg.subcommand;
    if (s == "check-condition-a") detail::check_condition_a(run);
    else if (s == "flow-dual") {
      if (cfg.geometry == "radial") detail::flow_dual(run, detail::dual_initial_radial(cfg));
      else detail::flow_dual(run, detail::dual_initial_ball(cfg));
    } else if (s == "flow-normalized" || s == "expander-limit") {
      const bool limit = s == "expander-limit";
      if (cfg.geometry == "radial") detail::flow_normalized(run, detail::dual_initial_radial(cfg), limit);
      else detail::flow_normalized(run, detail::dual_initial_ball(cfg), limit);
    } else if (s == "flow-primal-radial") detail::flow_primal(run);
    else if (s == "expander-radial") detail::expander_radial(run);
    else if (s == "legendre") detail::legendre_cmd(run);
    else if (s == "diagnose") detail::diagnose(run);
    else if (s == "compare-exact") detail::compare_exact(run);
    else throw ConfigError("unknown subcommand '" + s + "'");
  } catch (const ConfigError& e) {
    run.res.exitCode = 2;
    run.res.message = e.what();
  } catch (const std::exception& e) {
    run.res.exitCode = 1;
    run.res.message = e.what();
    if (run.dumped) run.res.message += " (state dumped to " + (run.out / "dump.snap").string() + ")";
  }
  run.dump = nullptr;
  if (run.res.exitCode == 0)
    for (const auto& s : run.res.series)
      if (!s.pass) {
        run.res.exitCode = 1;
        run.res.message = "monitor failed: " + s.name;
        break;
      }
  try {
    detail::write_outputs(run);
  } catch (const std::exception& e) {
    run.res.exitCode = 1;
    run.res.message = e.what();
  }
  run.res.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream(run.out / "timing.json") << nlohmann::json{{"wallSeconds", run.res.wallSeconds}}.dump(2) << '\n';
  return run.res;
}

}  // namespace sigmak
