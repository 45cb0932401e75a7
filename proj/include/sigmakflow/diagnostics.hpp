#pragma once
// Monitors over flow output. Every monitor produces a MonitorSeries whose
// verdict is recomputable from (times, values, predicate, threshold).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sigmakflow/errors.hpp"
#include "sigmakflow/expander.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/flow.hpp"
#include "sigmakflow/geometry.hpp"
#include "sigmakflow/legendre.hpp"
#include "sigmakflow/symfunc.hpp"

namespace sigmak {

enum class Predicate {
  allAtLeast,    ///< every value >= threshold
  allAtMost,     ///< every value <= threshold
  decreasingTo,  ///< nonincreasing after the transient, last value <= threshold
  orderAtLeast,  ///< times are 1/h; observed order between consecutive levels >= threshold
};

inline const char* to_string(Predicate p) {
  switch (p) {
    case Predicate::allAtLeast: return "allAtLeast";
    case Predicate::allAtMost: return "allAtMost";
    case Predicate::decreasingTo: return "decreasingTo";
    case Predicate::orderAtLeast: return "orderAtLeast";
  }
  return "?";
}

struct MonitorSeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;
  Predicate predicate = Predicate::allAtMost;
  double threshold = 0.0;
  double transient = 0.0;  ///< decreasingTo: leading fraction of samples exempt from monotonicity
  bool pass = false;
  std::string notice;
};

/// Relative slack for the monotonicity test; absorbs round-off on plateaus.
inline constexpr double kMonotoneSlack = 1e-9;

inline double observed_order(double coarse, double fine, double tCoarse, double tFine) {
  if (coarse == 0.0 && fine == 0.0) return std::numeric_limits<double>::infinity();
  return std::log(coarse / fine) / std::log(tFine / tCoarse);
}

/// Pure function of the series contents.
inline bool verdict(const MonitorSeries& s) {
  if (s.values.empty() || s.values.size() != s.times.size()) return false;
  for (double v : s.values)
    if (std::isnan(v)) return false;
  switch (s.predicate) {
    case Predicate::allAtLeast:
      return std::all_of(s.values.begin(), s.values.end(), [&](double v) { return v >= s.threshold; });
    case Predicate::allAtMost:
      return std::all_of(s.values.begin(), s.values.end(), [&](double v) { return v <= s.threshold; });
    case Predicate::decreasingTo: {
      const size_t start = static_cast<size_t>(std::floor(s.transient * static_cast<double>(s.values.size())));
      for (size_t i = std::max<size_t>(start, 1); i < s.values.size(); ++i)
        if (s.values[i] > s.values[i - 1] + kMonotoneSlack * std::abs(s.values[i - 1]) + 1e-300) return false;
      return s.values.back() <= s.threshold;
    }
    case Predicate::orderAtLeast: {
      if (s.values.size() < 2) return false;
      for (size_t i = 1; i < s.values.size(); ++i)
        if (!(observed_order(s.values[i - 1], s.values[i], s.times[i - 1], s.times[i]) >= s.threshold)) return false;
      return true;
    }
  }
  return false;
}

/// Checks the time axis and stores the verdict.
inline MonitorSeries& finalize(MonitorSeries& s) {
  for (size_t i = 1; i < s.times.size(); ++i)
    if (!(s.times[i] > s.times[i - 1])) throw DomainError("MonitorSeries '" + s.name + "': times must increase strictly");
  s.pass = verdict(s);
  return s;
}

template <class Field>
struct Snapshot {
  double t = 0.0;
  Field field;
};

namespace detail {

inline bool same_grid(const RadialField& a, const RadialField& b) {
  return a.h == b.h && a.values.size() == b.values.size();
}
inline bool same_grid(const BallField2D& a, const BallField2D& b) {
  return a.h == b.h && a.r == b.r && a.m == b.m && a.cells == b.cells;
}

inline bool usable(const RadialField&, size_t) { return true; }
inline bool usable(const BallField2D& f, size_t i) { return f.cells[i] != Cell::outside; }

inline double node_radius(const RadialField& f, size_t i) { return f.radius_at(static_cast<int>(i)); }
inline double node_radius(const BallField2D& f, size_t i) {
  const double x = f.node_i(static_cast<long>(i)) * f.h, y = f.node_j(static_cast<long>(i)) * f.h;
  return std::hypot(x, y);
}

}  // namespace detail

/// Per-time min over nodes of (upper - lower), optionally with a middle field
/// (min of mid - lower and upper - mid). Feed it one time at a time.
template <class Field>
class ComparisonAccumulator {
 public:
  explicit ComparisonAccumulator(std::string name, double tol) {
    series_.name = std::move(name);
    series_.predicate = Predicate::allAtLeast;
    series_.threshold = -tol;
  }

  void add(double t, const Field& lower, const Field& upper) { push(t, margin(lower, upper)); }

  void add_sandwich(double t, const Field& lower, const Field& mid, const Field& upper) {
    push(t, std::min(margin(lower, mid), margin(mid, upper)));
  }

  /// Sandwich against scale * lowerBase and scale * upperBase without building the scaled fields.
  void add_scaled_sandwich(double t, const Field& lowerBase, const Field& mid, const Field& upperBase, double scale) {
    if (!detail::same_grid(lowerBase, mid) || !detail::same_grid(mid, upperBase)) throw DomainError("comparison: grid mismatch");
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < mid.values.size(); ++i)
      if (detail::usable(mid, i))
        m = std::min(m, std::min(mid.values[i] - scale * lowerBase.values[i], scale * upperBase.values[i] - mid.values[i]));
    push(t, m);
  }

  MonitorSeries finish() {
    finalize(series_);
    return series_;
  }

 private:
  static double margin(const Field& a, const Field& b) {
    if (!detail::same_grid(a, b)) throw DomainError("comparison: grid mismatch");
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < a.values.size(); ++i)
      if (detail::usable(a, i)) m = std::min(m, b.values[i] - a.values[i]);
    return m;
  }

  void push(double t, double m) {
    if (!series_.times.empty() && !(t > series_.times.back())) return;
    series_.times.push_back(t);
    series_.values.push_back(m);
  }

  MonitorSeries series_;
};

/// min over points of (B - A) per time; passes iff >= -tol throughout.
template <class Field>
MonitorSeries comparison_check(const std::vector<Snapshot<Field>>& runA, const std::vector<Snapshot<Field>>& runB,
                               double tol, std::string name = "comparison") {
  if (runA.size() != runB.size()) throw DomainError("comparison_check: series lengths differ");
  ComparisonAccumulator<Field> acc(std::move(name), tol);
  for (size_t k = 0; k < runA.size(); ++k) {
    if (std::abs(runA[k].t - runB[k].t) > 1e-12 * std::max(1.0, std::abs(runA[k].t)))
      throw DomainError("comparison_check: clocks differ");
    acc.add(runA[k].t, runA[k].field, runB[k].field);
  }
  return acc.finish();
}

/// Interior space-time extrema of F~ x_{n+1} = F_*^alpha / w* against the running
/// extrema over the parabolic boundary (t = 0 slice and lateral boundary).
/// The lateral value is A(t)^alpha / (-u0*). Each sample records
/// max(intMax / bMax - 1, 1 - intMin / bMin).
template <class Field>
class BoundaryExtremumMonitor {
 public:
  BoundaryExtremumMonitor(const Field& initialDual, const SpeedParams& p, double relTol = 1e-6)
      : initial_(initialDual), params_(p) {
    series_.name = "boundary_extremum";
    series_.predicate = Predicate::allAtMost;
    series_.threshold = relTol;
  }

  /// Operator values -F_*^{-alpha} w* of the dual formulation at clock t; F~ x = -1/rate.
  void observe_rates(double t, std::span<const double> rates) {
    if (rates.size() != initial_.values.size()) throw DomainError("boundary_extremum: rate size mismatch");
    if (!series_.times.empty() && !(t > series_.times.back())) return;
    double iMax = -std::numeric_limits<double>::infinity(), iMin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < rates.size(); ++i) {
      if (!detail::is_interior(initial_, static_cast<long>(i))) continue;
      const double q = -1.0 / rates[i];
      iMax = std::max(iMax, q);
      iMin = std::min(iMin, q);
    }
    const double Aa = std::pow(scale_factor(t, params_.alpha), params_.alpha);
    for (size_t i = 0; i < initial_.values.size(); ++i) {
      if (!detail::is_boundary(initial_, static_cast<long>(i))) continue;
      const double q = Aa / (-initial_.values[i]);
      bMax_ = std::max(bMax_, q);
      bMin_ = std::min(bMin_, q);
    }
    double excess = 0.0;
    if (series_.times.empty() && t == 0.0) {
      bMax_ = std::max(bMax_, iMax);
      bMin_ = std::min(bMin_, iMin);
    } else {
      excess = std::max(iMax / bMax_ - 1.0, 1.0 - iMin / bMin_);
    }
    series_.times.push_back(t);
    series_.values.push_back(excess);
  }

  /// Evaluates the operator on the state's field (dual formulation only).
  void observe(const FlowState<Field>& st) {
    if (st.formulation != Formulation::dual) throw DomainError("boundary_extremum: dual formulation only");
    std::vector<double> rate;
    detail::rates(st, st.field, rate);
    observe_rates(st.t, rate);
  }

  MonitorSeries finish() {
    finalize(series_);
    return series_;
  }

 private:
  Field initial_;
  SpeedParams params_;
  double bMax_ = -std::numeric_limits<double>::infinity();
  double bMin_ = std::numeric_limits<double>::infinity();
  MonitorSeries series_;
};

template <class Field>
MonitorSeries boundary_extremum_check(const std::vector<FlowState<Field>>& run, double relTol = 1e-6) {
  if (run.empty()) throw DomainError("boundary_extremum_check: empty run");
  BoundaryExtremumMonitor<Field> mon(run.front().initial, run.front().params, relTol);
  for (const auto& st : run) mon.observe(st);
  return mon.finish();
}

namespace detail {

struct PrimalPointwise {
  std::vector<double> phi, v, kappaMax, dRad, dAng, kappaRad, kappaAng;
};

inline PrimalPointwise primal_pointwise(const RadialField& u, const SpeedParams& p) {
  const auto cd = primal_curvature(u, p);
  PrimalPointwise out;
  const size_t n = cd.size();
  for (auto* v : {&out.phi, &out.v, &out.kappaMax, &out.dRad, &out.dAng, &out.kappaRad, &out.kappaAng}) v->resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double kr = cd[i].curvMatrix[0];
    const double ka = p.n > 1 ? cd[i].curvMatrix[p.n + 1] : kr;
    if (!(kr > 0.0 && ka > 0.0)) throw ConvexityError("primal curvature <= 0 at radial node " + std::to_string(i), i);
    const RotationalSpeed F = rotational_F_alpha(p, kr, ka);
    out.phi[i] = F.value;
    out.dRad[i] = F.dRad;
    out.dAng[i] = F.dAng;
    out.v[i] = cd[i].tilt;
    out.kappaMax[i] = cd[i].kappa[0];
    out.kappaRad[i] = kr;
    out.kappaAng[i] = ka;
  }
  return out;
}

}  // namespace detail

/// Two-sided bound on Phi = F^alpha over K = {u + t <= c}:
///   ((c - t - u)/c)^g e^{2(v - V0)} / ((alpha - 1) V0) <= Phi < C2 V0,  g = 4 + 8 V0^2,
/// with V0 = max tilt over K and C2 = max Phi / v on the t = 0 slice. Each sample is the
/// smallest relative margin over K at that time. The lower bound needs alpha > 1.
inline MonitorSeries phi_bounds_check(const std::vector<Snapshot<RadialField>>& run, const SpeedParams& p, double c) {
  if (run.empty()) throw DomainError("phi_bounds_check: empty run");
  if (!(c > 0.0)) throw DomainError("phi_bounds_check: c must be > 0");
  MonitorSeries s;
  s.name = "phi_bounds";
  s.predicate = Predicate::allAtLeast;
  s.threshold = -1e-12;

  std::vector<detail::PrimalPointwise> pw;
  pw.reserve(run.size());
  for (const auto& snap : run) pw.push_back(detail::primal_pointwise(snap.field, p));

  double C2 = 0.0;
  for (size_t i = 0; i < pw[0].phi.size(); ++i) C2 = std::max(C2, pw[0].phi[i] / pw[0].v[i]);

  double V0 = -1.0;
  bool touches = false;
  for (size_t k = 0; k < run.size(); ++k) {
    const auto& u = run[k].field.values;
    for (size_t i = 0; i < u.size(); ++i)
      if (u[i] + run[k].t <= c) {
        V0 = std::max(V0, pw[k].v[i]);
        if (i + 1 == u.size()) touches = true;
      }
  }
  if (V0 < 0.0) throw DomainError("phi_bounds_check: K = {u + t <= c} is empty");
  const double g = 4.0 + 8.0 * V0 * V0;
  const bool lower = p.alpha > 1.0;
  if (!lower) s.notice = "alpha = 1: lower bound skipped, only Phi < C2 V0 checked";
  if (touches) s.notice += std::string(s.notice.empty() ? "" : "; ") + "K reaches the outer boundary of the grid";

  for (size_t k = 0; k < run.size(); ++k) {
    const auto& u = run[k].field.values;
    const double t = run[k].t;
    double m = std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t i = 0; i < u.size(); ++i) {
      if (!(u[i] + t <= c)) continue;
      any = true;
      const double phi = pw[k].phi[i];
      m = std::min(m, 1.0 - phi / (C2 * V0));
      if (lower) {
        const double lb = std::pow((c - t - u[i]) / c, g) * std::exp(2.0 * (pw[k].v[i] - V0)) / ((p.alpha - 1.0) * V0);
        if (lb > 0.0) m = std::min(m, phi / lb - 1.0);
      }
    }
    if (!any) continue;
    s.times.push_back(t);
    s.values.push_back(m);
  }
  finalize(s);
  if (touches) s.pass = false;
  return s;
}

/// Largest principal curvature where u < c, per time, against a ceiling.
inline MonitorSeries kappa_max_monitor(const std::vector<Snapshot<RadialField>>& run, const SpeedParams& p, double c,
                                       double ceiling) {
  MonitorSeries s;
  s.name = "kappa_max";
  s.predicate = Predicate::allAtMost;
  s.threshold = ceiling;
  for (const auto& snap : run) {
    const auto cd = primal_curvature(snap.field, p);
    double k = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cd.size(); ++i)
      if (snap.field.values[i] < c) k = std::max(k, cd[i].kappa[0]);
    if (std::isinf(k)) continue;
    s.times.push_back(snap.t);
    s.values.push_back(k);
  }
  return finalize(s);
}

struct EvolutionResiduals {
  double eel1 = 0.0;  ///< sup |L u - (1 - alpha) Phi v|
  double eel2 = 0.0;  ///< sup |L v + (sum Phi^ii kappa_i^2) v|
  double eel3 = 0.0;  ///< sup |L Phi + (sum Phi^ii kappa_i^2) Phi|
};

/// Residuals of the evolution identities for a radial primal run, from three
/// snapshots at t - d, t, t + d on one grid. L = d/dt - Phi^{ij} nabla_ij, with
/// d/dt following the normal motion. Nodes 2 .. interiorFraction * N only.
inline EvolutionResiduals evolution_identity_residuals(const Snapshot<RadialField>& prev, const Snapshot<RadialField>& mid,
                                                       const Snapshot<RadialField>& next, const SpeedParams& p,
                                                       double interiorFraction = 0.8) {
  if (!detail::same_grid(prev.field, mid.field) || !detail::same_grid(mid.field, next.field))
    throw DomainError("evolution_identity_residuals: grid mismatch");
  const double d1 = mid.t - prev.t, d2 = next.t - mid.t;
  if (!(d1 > 0.0) || std::abs(d1 - d2) > 1e-9 * d1) throw DomainError("evolution_identity_residuals: snapshots must be equally spaced");
  const auto a = detail::primal_pointwise(prev.field, p);
  const auto b = detail::primal_pointwise(mid.field, p);
  const auto c = detail::primal_pointwise(next.field, p);
  const RadialField& u = mid.field;
  const double h = u.h;
  const int last = static_cast<int>(std::floor(interiorFraction * u.intervals()));
  if (last < 3) throw DomainError("evolution_identity_residuals: grid too coarse");

  EvolutionResiduals r;
  for (int i = 2; i <= last; ++i) {
    const double rho = u.radius_at(i);
    const Deriv du = derivatives_1d(u.values, i, h, true);
    const double w = std::sqrt(1.0 - du.d1 * du.d1);
    const double phi = b.phi[i], v = b.v[i];
    const double frr = b.dRad[i], faa = b.dAng[i];
    auto L = [&](std::span<const double> f, double ft) {
      const Deriv d = derivatives_1d(f, i, h, true);
      const double hessRR = (d.d2 + du.d2 * du.d1 * d.d1 / (w * w)) / (w * w);
      const double hessAA = d.d1 / (rho * w * w);
      return ft + phi * du.d1 * d.d1 / w - frr * hessRR - (p.n - 1) * faa * hessAA;
    };
    const double inv2d = 1.0 / (2.0 * d1);
    const double ut = (next.field.values[i] - prev.field.values[i]) * inv2d;
    const double vt = (c.v[i] - a.v[i]) * inv2d;
    const double pt = (c.phi[i] - a.phi[i]) * inv2d;
    const double sq = frr * b.kappaRad[i] * b.kappaRad[i] + (p.n - 1) * faa * b.kappaAng[i] * b.kappaAng[i];
    r.eel1 = std::max(r.eel1, std::abs(L(u.values, ut) - (1.0 - p.alpha) * phi * v));
    r.eel2 = std::max(r.eel2, std::abs(L(b.v, vt) + sq * v));
    r.eel3 = std::max(r.eel3, std::abs(L(b.phi, pt) + sq * phi));
  }
  return r;
}

/// One series per identity over a refinement ladder (h decreasing); passes
/// iff the observed order between consecutive levels is >= minOrder.
inline std::vector<MonitorSeries> evolution_identity_check(const std::vector<double>& h,
                                                          const std::vector<EvolutionResiduals>& ladder,
                                                          double minOrder = 0.8) {
  if (h.size() != ladder.size() || h.size() < 2) throw DomainError("evolution_identity_check: need >= 2 levels");
  std::vector<MonitorSeries> out(3);
  const char* names[3] = {"eel1", "eel2", "eel3"};
  for (int q = 0; q < 3; ++q) {
    out[q].name = names[q];
    out[q].predicate = Predicate::orderAtLeast;
    out[q].threshold = minOrder;
    for (size_t l = 0; l < h.size(); ++l) {
      out[q].times.push_back(1.0 / h[l]);
      out[q].values.push_back(q == 0 ? ladder[l].eel1 : q == 1 ? ladder[l].eel2 : ladder[l].eel3);
    }
    finalize(out[q]);
  }
  return out;
}

struct RadialJet {
  double u = 0.0, up = 0.0, upp = 0.0;
};

namespace detail {

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double covariance_gap(const SpeedParams& p, double beta, const RadialCurvature& c, const RadialCurvature& ch) {
  const double phi = rotational_F_alpha(p, c.kappaRad, c.kappaAng).value;
  const double phiHat = rotational_F_alpha(p, ch.kappaRad, ch.kappaAng).value;
  return std::max(relative_gap(phiHat, std::pow(beta, -p.alpha) * phi), relative_gap(ch.support, beta * c.support));
}

}  // namespace detail

/// Pointwise covariance between u and a candidate u^: F^alpha(u^) at beta rho must be
/// beta^{-alpha} F^alpha(u) at rho and the support function must scale by beta.
/// `jet(rho)` and `hatJet(rho^)` return value, first and second derivative.
template <class Jet, class HatJet>
  requires std::invocable<Jet&, double> && std::invocable<HatJet&, double>
MonitorSeries scaling_covariance_check(Jet&& jet, HatJet&& hatJet, double beta, const SpeedParams& p, double R,
                                       int samples = 200) {
  if (!(beta > 0.0)) throw DomainError("scaling_covariance_check: beta must be > 0");
  p.validate();
  MonitorSeries s;
  s.name = "scaling_covariance";
  s.predicate = Predicate::allAtMost;
  s.threshold = 1e-12;
  for (int i = 0; i <= samples; ++i) {
    const double rho = R * i / samples;
    const RadialJet j = jet(rho);
    const RadialJet jh = hatJet(beta * rho);
    const RadialCurvature c = radial_curvature_closed_form(j.u, j.up, j.upp, rho, p.n);
    const RadialCurvature ch = radial_curvature_closed_form(jh.u, jh.up, jh.upp, beta * rho, p.n);
    s.times.push_back(rho);
    s.values.push_back(detail::covariance_gap(p, beta, c, ch));
  }
  return finalize(s);
}

/// u^(x) = beta u(x / beta).
template <class Jet>
  requires std::invocable<Jet&, double>
MonitorSeries scaling_covariance_check(Jet&& jet, double beta, const SpeedParams& p, double R, int samples = 200) {
  auto hat = [&](double rh) {
    const RadialJet j = jet(rh / beta);
    return RadialJet{beta * j.u, j.up, j.upp / beta};
  };
  return scaling_covariance_check(jet, hat, beta, p, R, samples);
}

/// Grid version: u^ lives on the grid of spacing beta h with values beta u_i, so
/// the nodes correspond exactly. Only rounding separates the two sides; second
/// differences lose a factor |u| / (h^2 |u''|) of it, which sets the threshold.
inline MonitorSeries scaling_covariance_check(const RadialField& u0, double beta, const SpeedParams& p) {
  if (!(beta > 0.0)) throw DomainError("scaling_covariance_check: beta must be > 0");
  p.validate();
  RadialField hat = u0;
  hat.h = beta * u0.h;
  for (double& v : hat.values) v *= beta;
  MonitorSeries s;
  s.name = "scaling_covariance";
  s.predicate = Predicate::allAtMost;
  double amp = 0.0;
  for (int i = 0; i <= u0.intervals(); ++i) {
    const double d2 = std::abs(derivatives_1d(u0.values, i, u0.h, true).d2);
    amp = std::max(amp, std::abs(u0.values[i]) / (u0.h * u0.h * std::max(d2, 1e-300)));
  }
  s.threshold = std::max(1e-12, 16.0 * std::numeric_limits<double>::epsilon() * amp);
  s.notice = "rounding threshold " + std::to_string(s.threshold);
  for (int i = 0; i <= u0.intervals(); ++i) {
    const Deriv d = derivatives_1d(u0.values, i, u0.h, true);
    const Deriv dh = derivatives_1d(hat.values, i, hat.h, true);
    const RadialCurvature c = radial_curvature_closed_form(u0.values[i], d.d1, d.d2, u0.radius_at(i), p.n);
    const RadialCurvature ch = radial_curvature_closed_form(hat.values[i], dh.d1, dh.d2, hat.radius_at(i), p.n);
    s.times.push_back(u0.radius_at(i));
    s.values.push_back(detail::covariance_gap(p, beta, c, ch));
  }
  return finalize(s);
}

struct OrbitOptions {
  double R = 4.0;
  double h = 1.0 / 128.0;
  double beta = 1.5;
  std::vector<double> times{0.1, 0.5};
  double compareFraction = 0.9;  ///< compare on rho <= compareFraction * R
  double tolerance = 5e-3;
  RunOptions run;
  std::optional<double> timeExponent;  ///< defaults to alpha + 1; anything else breaks the orbit
};

/// Runs the primal radial flow from u0 on [0, R] with boundary data A(t) u0(R / A(t)),
/// and from u^0 = beta u0(. / beta) on [0, beta R] with the matching data, then
/// compares u(x, t) with u^(beta x, beta^{alpha+1} t) / beta.
inline MonitorSeries flow_orbit_check(const std::function<double(double)>& u0, const SpeedParams& p,
                                      const OrbitOptions& o = {}) {
  p.validate();
  const double beta = o.beta, a = p.alpha;
  const double tScale = std::pow(beta, o.timeExponent.value_or(a + 1.0));
  auto g = [&](double t) {
    const double A = scale_factor(t, a);
    return A * u0(o.R / A);
  };
  const BoundaryProvider bp = g;
  const BoundaryProvider bpHat = [&](double th) { return beta * g(th / tScale); };

  const int n = RadialField::intervals_for(o.R, o.h);
  const int nHat = RadialField::intervals_for(beta * o.R, o.h);
  auto st = make_state(RadialField::sample(o.R, n, u0), Formulation::primalRadial, p);
  auto stHat = make_state(RadialField::sample(beta * o.R, nHat, [&](double x) { return beta * u0(x / beta); }),
                          Formulation::primalRadial, p);

  MonitorSeries s;
  s.name = "flow_orbit";
  s.predicate = Predicate::allAtMost;
  s.threshold = o.tolerance;
  for (double t : o.times) {
    run_until(st, t, o.run, &bp);
    run_until(stHat, tScale * t, o.run, &bpHat);
    double dev = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = st.field.radius_at(i);
      if (x > o.compareFraction * o.R) break;
      dev = std::max(dev, std::abs(st.field.values[i] - stHat.field.interpolate(beta * x) / beta));
    }
    s.times.push_back(t);
    s.values.push_back(dev);
  }
  return finalize(s);
}

/// Sup distance to `target` over nodes with |xi| <= compactFraction * r at each time.
/// Passes iff nonincreasing after the transient and the final value is <= tol.
template <class Field>
MonitorSeries convergence_report(const std::vector<Snapshot<Field>>& run, const RadialField& targetDual,
                                 double compactFraction, double tol, double transient = 0.1) {
  if (run.empty()) throw DomainError("convergence_report: empty run");
  MonitorSeries s;
  s.name = "convergence";
  s.predicate = Predicate::decreasingTo;
  s.threshold = tol;
  s.transient = transient;
  for (const auto& snap : run) {
    const Field& f = snap.field;
    double rim = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i)
      if (detail::is_interior(f, static_cast<long>(i)) || detail::is_boundary(f, static_cast<long>(i)))
        rim = std::max(rim, detail::node_radius(f, i));
    const double cut = compactFraction * rim;
    if (cut > targetDual.outer_radius() * (1.0 + 1e-12)) throw DomainError("convergence_report: target does not cover the run");
    double d = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i) {
      if (!detail::usable(f, i)) continue;
      const double rho = detail::node_radius(f, i);
      if (rho > cut) continue;
      d = std::max(d, std::abs(f.values[i] - targetDual.interpolate(rho)));
    }
    s.times.push_back(snap.t);
    s.values.push_back(d);
  }
  return finalize(s);
}

/// Same with the target given as a primal expander profile; its dual is taken on [0, r].
template <class Field>
MonitorSeries convergence_report(const std::vector<Snapshot<Field>>& run, const ExpanderSolution& target, double r,
                                 double compactFraction, double tol, double transient = 0.1) {
  const int n = RadialField::intervals_for(r, run.front().field.h);
  return convergence_report(run, legendre_transform(target.profile, r, n), compactFraction, tol, transient);
}

/// H~ >= -tol at every recorded time (min over points supplied per time).
inline MonitorSeries residual_sign_check(const std::vector<double>& tau, const std::vector<double>& minResidual,
                                         double tol = 1e-8) {
  MonitorSeries s;
  s.name = "residual_sign";
  s.predicate = Predicate::allAtLeast;
  s.threshold = -tol;
  s.times = tau;
  s.values = minResidual;
  return finalize(s);
}

/// sup |H~| versus tau; nonincreasing after the transient and ending <= tol.
/// The notice carries the discrete integral sum sup|H~| dtau.
inline MonitorSeries residual_history_check(const std::vector<double>& tau, const std::vector<double>& supResidual,
                                            double tol, double transient = 0.1) {
  MonitorSeries s;
  s.name = "residual_history";
  s.predicate = Predicate::decreasingTo;
  s.threshold = tol;
  s.transient = transient;
  s.times = tau;
  s.values = supResidual;
  double integral = 0.0;
  for (size_t i = 1; i < tau.size(); ++i) integral += supResidual[i - 1] * (tau[i] - tau[i - 1]);
  s.notice = "integral " + std::to_string(integral);
  return finalize(s);
}

/// Sup distance between two radial dual fields on |xi| <= inner (interpolated).
inline double dual_distance(const RadialField& a, const RadialField& b, double inner, int samples = 400) {
  if (inner > a.outer_radius() * (1.0 + 1e-12) || inner > b.outer_radius() * (1.0 + 1e-12))
    throw DomainError("dual_distance: inner disk outside a field");
  double d = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double s = inner * i / samples;
    d = std::max(d, std::abs(a.interpolate(s) - b.interpolate(s)));
  }
  return d;
}

/// Limits for increasing r compared on |xi| <= inner with a reference field; the
/// series (over r) must be nonincreasing.
inline MonitorSeries domain_exhaustion_check(const std::vector<std::pair<double, RadialField>>& limits,
                                             const RadialField& reference, double inner,
                                             std::string name = "domain_exhaustion") {
  MonitorSeries s;
  s.name = std::move(name);
  s.predicate = Predicate::decreasingTo;
  s.threshold = std::numeric_limits<double>::infinity();
  for (const auto& [r, f] : limits) {
    s.times.push_back(r);
    s.values.push_back(dual_distance(f, reference, inner));
  }
  return finalize(s);
}

}  // namespace sigmak
