#pragma once
// Explicit time integration of
//   dual:        u*_t = -F_*^{-alpha}(M) w*          on B_r, u* = A(t) u0* on the boundary
//   normalized:  u~*_tau = -F_*^{-alpha}(M) w* - u~* on B_r, u~* = u0* on the boundary
//   primal:      u_t = F^alpha(kappa) w             radial, Dirichlet at rho = R
// with A(t) = ((1+alpha) t + 1)^{1/(1+alpha)} and tau = ln((1+alpha) t + 1) / (1+alpha).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "sigmakflow/errors.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/geometry.hpp"
#include "sigmakflow/symfunc.hpp"

namespace sigmak {

inline double scale_factor(double t, double alpha) {
  if (!(t >= 0.0)) throw DomainError("scale_factor: t must be >= 0");
  return std::pow((1.0 + alpha) * t + 1.0, 1.0 / (1.0 + alpha));
}

inline double time_change(double t, double alpha) {
  if (!(t >= 0.0)) throw DomainError("time_change: t must be >= 0");
  return std::log1p((1.0 + alpha) * t) / (1.0 + alpha);
}

inline double time_change_inverse(double tau, double alpha) {
  return std::expm1((1.0 + alpha) * tau) / (1.0 + alpha);
}

enum class Formulation { dual, normalized, primalRadial };
enum class Scheme { euler, rk2 };

inline const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::dual: return "dual";
    case Formulation::normalized: return "normalized";
    case Formulation::primalRadial: return "primalRadial";
  }
  return "?";
}

template <class Field>
struct FlowState {
  double t = 0.0;
  double tau = 0.0;
  Field field;
  Field initial;  ///< u0* for the dual forms (boundary data), u0 for the primal form
  Formulation formulation = Formulation::dual;
  SpeedParams params;

  /// The clock the formulation is integrated in: tau for normalized, t otherwise.
  double clock() const { return formulation == Formulation::normalized ? tau : t; }
};

template <class Field>
FlowState<Field> make_state(const Field& initial, Formulation f, const SpeedParams& p) {
  p.validate();
  return FlowState<Field>{0.0, 0.0, initial, initial, f, p};
}

enum class StepStatus { ok, cflRefused };

struct StepReport {
  StepStatus status = StepStatus::ok;
  double dtUsed = 0.0;
  double dtRequired = 0.0;  ///< largest admissible step at the current state
  double maxSpeed = 0.0;
  double cflRatio = 0.0;
  double minEigenvalue = std::numeric_limits<double>::infinity();
  /// H~ = -F_*^{-alpha} w* - u~* over interior nodes, measured before the step (dual forms only).
  double minResidual = std::numeric_limits<double>::quiet_NaN();
  double maxResidual = std::numeric_limits<double>::quiet_NaN();
  double clockBefore = 0.0;
  /// Operator values at the state before the step (valid only inside an observer call).
  std::span<const double> rates;
};

struct StepOptions {
  Scheme scheme = Scheme::euler;
  double cflFactor = 0.2;
};

using BoundaryProvider = std::function<double(double t)>;

namespace detail {

struct RateStats {
  double maxDiff = 0.0;
  double maxSpeed = 0.0;
  double minEigenvalue = std::numeric_limits<double>::infinity();
};

inline double inv_pow(double f, double alpha) { return alpha == 1.0 ? 1.0 / f : std::pow(f, -alpha); }

/// rate = -F_*^{-alpha} w* on nodes 0..N-1 of a radial dual field; rate[N] = 0.
inline RateStats dual_rates(const RadialField& f, const SpeedParams& p, std::vector<double>& rate) {
  const int nn = f.intervals();
  rate.assign(nn + 1, 0.0);
  RateStats st;
  for (int i = 0; i < nn; ++i) {
    const double s = f.radius_at(i);
    const Deriv d = derivatives_1d(f.values, i, f.h, true);
    const RadialRadii rr = radial_dual_radii(s, d.d1, d.d2);
    if (!(rr.radial > 0.0 && rr.angular > 0.0))
      throw ConvexityError("dual flow: principal radius <= 0 at radial node " + std::to_string(i), i);
    const RotationalSpeed F = rotational_F_star(p, rr.radial, rr.angular);
    const double ws = std::sqrt(1.0 - s * s);
    const double fa = inv_pow(F.value, p.alpha);
    const double coef = p.alpha * fa / F.value;
    // at the pole every radius is u*''(0), so the coefficients add up
    const double diff = (i == 0) ? coef * (F.dRad + (p.n - 1) * F.dAng)
                                 : coef * std::max(F.dRad * ws * ws * ws * ws, F.dAng * ws * ws);
    rate[i] = -fa * ws;
    st.maxDiff = std::max(st.maxDiff, diff);
    st.maxSpeed = std::max(st.maxSpeed, std::abs(rate[i]));
    st.minEigenvalue = std::min(st.minEigenvalue, std::min(rr.radial, rr.angular));
  }
  return st;
}

/// Per-grid constants of the ball kernel: interior run of every row, and w*, gamma* per node.
struct BallGeometry {
  int m = -1;
  double h = 0.0, r = 0.0;
  std::vector<int> lo, hi;  ///< interior j-range of row i + m (empty when lo > hi)
  std::vector<double> ws, g11, g12, g22;

  void build(const BallField2D& f) {
    m = f.m;
    h = f.h;
    r = f.r;
    lo.assign(f.side(), 1);
    hi.assign(f.side(), 0);
    ws.assign(f.values.size(), 0.0);
    g11 = g12 = g22 = ws;
    for (int i = -m; i <= m; ++i) {
      int a = m + 1, b = -m - 1;
      for (int j = -m; j <= m; ++j) {
        if (f.cell(i, j) == Cell::outside) continue;
        const double x = i * h, y = j * h;
        const double w = std::sqrt(1.0 - x * x - y * y);
        const double q = 1.0 / (1.0 + w);
        const long idx = f.index(i, j);
        ws[idx] = w;
        g11[idx] = 1.0 - x * x * q;
        g12[idx] = -x * y * q;
        g22[idx] = 1.0 - y * y * q;
        if (f.cell(i, j) == Cell::interior) {
          a = std::min(a, j);
          b = std::max(b, j);
        }
      }
      lo[i + m] = a;
      hi[i + m] = b;
    }
  }
  bool matches(const BallField2D& f) const { return m == f.m && h == f.h && r == f.r; }
};

/// Ball (n = 2) version; rate on interior nodes, 0 elsewhere.
inline RateStats dual_rates(const BallField2D& f, const SpeedParams& p, std::vector<double>& rate) {
  if (p.n != 2) throw DomainError("dual flow on a 2D ball requires n = 2");
  thread_local BallGeometry geo;
  if (!geo.matches(f)) geo.build(f);
  rate.assign(f.values.size(), 0.0);
  const int m = f.m, side = f.side();
  const double ih2 = 1.0 / (f.h * f.h);
  const double* v = f.values.data();
  double maxDiff = 0.0, maxSpeed = 0.0, minEig = std::numeric_limits<double>::infinity();
  long bad = std::numeric_limits<long>::max();
#pragma omp parallel for schedule(static) reduction(max : maxDiff, maxSpeed) reduction(min : minEig, bad)
  for (int i = -m + 1; i < m; ++i) {
    const int jlo = geo.lo[i + m], jhi = geo.hi[i + m];
    for (int j = jlo; j <= jhi; ++j) {
      const long idx = f.index(i, j);
      const double c = v[idx];
      const double hxx = (v[idx + side] - 2 * c + v[idx - side]) * ih2;
      const double hyy = (v[idx + 1] - 2 * c + v[idx - 1]) * ih2;
      const double hxy = (v[idx + side + 1] - v[idx + side - 1] - v[idx - side + 1] + v[idx - side - 1]) * 0.25 * ih2;
      const double ws = geo.ws[idx];
      const double g11 = geo.g11[idx], g12 = geo.g12[idx], g22 = geo.g22[idx];
      // B = H gamma*, M = w* gamma* B
      const double b11 = hxx * g11 + hxy * g12, b12 = hxx * g12 + hxy * g22;
      const double b21 = hxy * g11 + hyy * g12, b22 = hxy * g12 + hyy * g22;
      const double m11 = ws * (g11 * b11 + g12 * b21);
      const double m22 = ws * (g12 * b12 + g22 * b22);
      const double m12 = 0.5 * ws * ((g11 * b12 + g12 * b22) + (g12 * b11 + g22 * b21));
      const double mean = 0.5 * (m11 + m22), hd = 0.5 * (m11 - m22);
      const double dev = std::sqrt(hd * hd + m12 * m12);
      const double l1 = mean + dev, l2 = mean - dev;
      if (!(l2 > 0.0)) {
        bad = std::min(bad, idx);
        continue;
      }
      double F, d1, d2;
      if (p.k == 1) {
        // F = l1 l2 / (l1 + l2), dF/dl1 = (l2 / (l1 + l2))^2
        const double is1 = 1.0 / (l1 + l2);
        F = l1 * l2 * is1;
        d1 = l2 * l2 * is1 * is1;
        d2 = l1 * l1 * is1 * is1;
      } else {
        F = std::sqrt(l1 * l2);
        d1 = 0.5 * l2 / F;
        d2 = 0.5 * l1 / F;
      }
      // dF/dM = d2 I + (d1 - d2) Pi with Pi = (M - l2 I) / (l1 - l2) the projector on the l1 eigenspace
      double p11 = d2, p12 = 0.0, p22 = d2;
      if (dev > 0.0) {
        const double c1 = (d1 - d2) / (2.0 * dev);
        p11 += c1 * (m11 - l2);
        p22 += c1 * (m22 - l2);
        p12 = c1 * m12;
      }
      // G = gamma* P gamma*
      const double e11 = p11 * g11 + p12 * g12, e12 = p11 * g12 + p12 * g22;
      const double e21 = p12 * g11 + p22 * g12, e22 = p12 * g12 + p22 * g22;
      const double G11 = g11 * e11 + g12 * e21, G22 = g12 * e12 + g22 * e22;
      const double G12 = 0.5 * ((g11 * e12 + g12 * e22) + (g12 * e11 + g22 * e21));
      const double gd = 0.5 * (G11 - G22);
      const double gmax = 0.5 * (G11 + G22) + std::sqrt(gd * gd + G12 * G12);
      const double fa = inv_pow(F, p.alpha);
      const double r = -fa * ws;
      rate[idx] = r;
      maxDiff = std::max(maxDiff, p.alpha * fa / F * ws * ws * gmax);
      maxSpeed = std::max(maxSpeed, std::abs(r));
      minEig = std::min(minEig, l2);
    }
  }
  if (bad != std::numeric_limits<long>::max())
    throw ConvexityError("dual flow: radii matrix not positive definite at node " + std::to_string(bad), bad);
  return {maxDiff, maxSpeed, minEig};
}

/// rate = F^alpha(kappa) w on nodes 0..N-1 of a radial graph.
inline RateStats primal_rates(const RadialField& f, const SpeedParams& p, std::vector<double>& rate) {
  const int nn = f.intervals();
  rate.assign(nn + 1, 0.0);
  RateStats st;
  const double* v = f.values.data();
  const double inv2h = 0.5 / f.h, invh2 = 1.0 / (f.h * f.h);
  for (int i = 0; i < nn; ++i) {
    // centered differences, even reflection at the pole
    const double d1 = i == 0 ? 0.0 : (v[i + 1] - v[i - 1]) * inv2h;
    const double d2 = (i == 0 ? 2.0 * (v[1] - v[0]) : v[i + 1] - 2.0 * v[i] + v[i - 1]) * invh2;
    const double g2 = d1 * d1;
    if (!(g2 <= 1.0 - kSpacelikeGuard)) throw SpacelikeError("primal flow: spacelike guard violated", i, g2);
    const double w2 = 1.0 - g2, w = std::sqrt(w2);
    const double kr = d2 / (w2 * w);
    const double ka = i == 0 ? kr : d1 / (f.h * i * w);
    if (!(kr > 0.0 && (p.n == 1 || ka > 0.0)))
      throw ConvexityError("primal flow: curvature left the convex cone at radial node " + std::to_string(i), i);
    const RotationalSpeed phi = rotational_F_alpha(p, kr, ka);
    const double diff = (i == 0) ? phi.dRad + (p.n - 1) * phi.dAng : std::max(phi.dRad, phi.dAng);
    rate[i] = phi.value * w;
    st.maxDiff = std::max(st.maxDiff, diff / w2);
    st.maxSpeed = std::max(st.maxSpeed, std::abs(rate[i]));
    st.minEigenvalue = std::min(st.minEigenvalue, std::min(kr, ka));
  }
  return st;
}

inline bool is_interior(const RadialField& f, long i) { return i < f.intervals(); }
inline bool is_interior(const BallField2D& f, long i) { return f.cells[i] == Cell::interior; }
inline bool is_boundary(const RadialField& f, long i) { return i == f.intervals(); }
inline bool is_boundary(const BallField2D& f, long i) { return f.cells[i] == Cell::ring; }

template <class Field>
RateStats rates(const FlowState<Field>& st, const Field& f, std::vector<double>& rate) {
  if (st.formulation == Formulation::primalRadial) {
    if constexpr (std::is_same_v<Field, RadialField>) return primal_rates(f, st.params, rate);
    else throw DomainError("primal flow is radial only");
  }
  RateStats s = dual_rates(f, st.params, rate);
  if (st.formulation == Formulation::normalized) {
    for (size_t i = 0; i < rate.size(); ++i)
      if (is_interior(f, static_cast<long>(i))) rate[i] -= f.values[i];
  }
  return s;
}

template <class Field>
void stamp_boundary(const FlowState<Field>& st, Field& f, double clockValue, const BoundaryProvider* bp) {
  switch (st.formulation) {
    case Formulation::dual: {
      const double A = scale_factor(clockValue, st.params.alpha);
      for (size_t i = 0; i < f.values.size(); ++i)
        if (is_boundary(f, static_cast<long>(i))) f.values[i] = A * st.initial.values[i];
      break;
    }
    case Formulation::normalized:
      for (size_t i = 0; i < f.values.size(); ++i)
        if (is_boundary(f, static_cast<long>(i))) f.values[i] = st.initial.values[i];
      break;
    case Formulation::primalRadial:
      if (!bp || !*bp) throw DomainError("primal flow needs a boundary provider");
      f.values.back() = (*bp)(clockValue);
      break;
  }
}

template <class Field>
double grid_spacing(const Field& f) {
  return f.h;
}

}  // namespace detail

/// Evaluates the operator at the current state: admissible step, speeds and H~.
template <class Field>
StepReport probe(const FlowState<Field>& st, std::vector<double>& rate, const StepOptions& opt = {}) {
  StepReport rep;
  const detail::RateStats rs = detail::rates(st, st.field, rate);
  const double h = detail::grid_spacing(st.field);
  rep.dtRequired = rs.maxDiff > 0.0 ? opt.cflFactor * h * h / rs.maxDiff : std::numeric_limits<double>::infinity();
  rep.maxSpeed = rs.maxSpeed;
  rep.minEigenvalue = rs.minEigenvalue;
  if (st.formulation != Formulation::primalRadial) {
    const double A = st.formulation == Formulation::dual ? scale_factor(st.t, st.params.alpha) : 1.0;
    const double Aa = std::pow(A, st.params.alpha);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (size_t i = 0; i < rate.size(); ++i) {
      if (!detail::is_interior(st.field, static_cast<long>(i))) continue;
      const double H = st.formulation == Formulation::dual ? Aa * rate[i] - st.field.values[i] / A : rate[i];
      lo = std::min(lo, H);
      hi = std::max(hi, H);
    }
    rep.minResidual = lo;
    rep.maxResidual = hi;
  }
  return rep;
}

namespace detail {

template <class Field>
void apply_step(FlowState<Field>& st, double dt, const std::vector<double>& rate, const StepOptions& opt,
                const BoundaryProvider* bp, double clockEnd = std::numeric_limits<double>::quiet_NaN()) {
  const double c0 = st.clock();
  const double c1 = std::isnan(clockEnd) ? c0 + dt : clockEnd;
  if (opt.scheme == Scheme::euler || dt == 0.0) {
    // rate vanishes off the interior, so the update needs no mask
    for (size_t i = 0; i < rate.size(); ++i) st.field.values[i] += dt * rate[i];
    stamp_boundary(st, st.field, c1, bp);
  } else {
    Field next = st.field;
    thread_local std::vector<double> rate2;
    Field mid = st.field;
    for (size_t i = 0; i < rate.size(); ++i)
      if (is_interior(st.field, static_cast<long>(i))) mid.values[i] += 0.5 * dt * rate[i];
    stamp_boundary(st, mid, c0 + 0.5 * dt, bp);
    rates(st, mid, rate2);
    for (size_t i = 0; i < rate2.size(); ++i)
      if (is_interior(st.field, static_cast<long>(i))) next.values[i] += dt * rate2[i];
    stamp_boundary(st, next, c1, bp);
    st.field = std::move(next);
  }
  if (st.formulation == Formulation::normalized) {
    st.tau = c1;
    st.t = time_change_inverse(st.tau, st.params.alpha);
  } else {
    st.t = c1;
    st.tau = time_change(st.t, st.params.alpha);
  }
}

}  // namespace detail

/// Advances the state by dt in its own clock. Refuses (state untouched) when dt exceeds the CFL bound.
template <class Field>
StepReport advance(FlowState<Field>& st, double dt, const StepOptions& opt = {}, const BoundaryProvider* bp = nullptr) {
  if (!(dt >= 0.0)) throw DomainError("advance: dt must be >= 0");
  thread_local std::vector<double> rate;
  StepReport rep = probe(st, rate, opt);
  rep.cflRatio = dt / rep.dtRequired;
  if (dt > rep.dtRequired * (1.0 + 1e-12)) {
    rep.status = StepStatus::cflRefused;
    return rep;
  }
  detail::apply_step(st, dt, rate, opt, bp);
  rep.dtUsed = dt;
  return rep;
}

/// Largest admissible step at the current state.
template <class Field>
double cfl_step(const FlowState<Field>& st, const StepOptions& opt = {}) {
  thread_local std::vector<double> rate;
  return probe(st, rate, opt).dtRequired;
}

template <class Field>
struct StepResult {
  FlowState<Field> state;
  StepReport report;
};

template <class Field>
StepResult<Field> step_dual(FlowState<Field> st, double dt, const StepOptions& opt = {}) {
  if (st.formulation != Formulation::dual) throw DomainError("step_dual: state is not in the dual formulation");
  StepReport r = advance(st, dt, opt);
  return {std::move(st), r};
}

template <class Field>
StepResult<Field> step_normalized(FlowState<Field> st, double dtau, const StepOptions& opt = {}) {
  if (st.formulation != Formulation::normalized) throw DomainError("step_normalized: state is not normalized");
  StepReport r = advance(st, dtau, opt);
  return {std::move(st), r};
}

inline StepResult<RadialField> step_primal_radial(FlowState<RadialField> st, double dt, const BoundaryProvider& bp,
                                                  const StepOptions& opt = {}) {
  if (st.formulation != Formulation::primalRadial) throw DomainError("step_primal_radial: state is not primal");
  StepReport r = advance(st, dt, opt, &bp);
  return {std::move(st), r};
}

/// Dual forms: u*/A(t) (the normalized field is returned as is).
template <class Field>
Field rescale(const FlowState<Field>& st) {
  if (st.formulation == Formulation::primalRadial) {
    if constexpr (std::is_same_v<Field, RadialField>) {
      const double A = scale_factor(st.t, st.params.alpha);
      const double outer = st.field.outer_radius() / A;
      return RadialField::sample(outer, st.field.intervals(),
                                 [&](double x) { return st.field.interpolate(A * x) / A; });
    } else {
      throw DomainError("rescale: primal flow is radial only");
    }
  }
  Field out = st.field;
  if (st.formulation == Formulation::dual) {
    const double A = scale_factor(st.t, st.params.alpha);
    for (double& v : out.values) v /= A;
  }
  return out;
}

/// Primal rescale onto a chosen grid [0, outer]; outer * A(t) must lie in the stored domain.
inline RadialField rescale(const FlowState<RadialField>& st, double outer, int intervals) {
  if (st.formulation != Formulation::primalRadial) throw DomainError("rescale(outer): primal states only");
  const double A = scale_factor(st.t, st.params.alpha);
  if (A * outer > st.field.outer_radius() * (1.0 + 1e-12)) throw DomainError("rescale: radius outside stored domain");
  return RadialField::sample(outer, intervals, [&](double x) { return st.field.interpolate(A * x) / A; });
}

struct RunOptions {
  StepOptions step;
  long maxSteps = 100'000'000;
};

struct RunSummary {
  long steps = 0;
  double minEigenvalue = std::numeric_limits<double>::infinity();
  double maxCflRatio = 0.0;
};

/// Integrates until the state's clock reaches `clockEnd`, calling observer(state, report) after every step.
template <class Field, class Observer>
  requires std::invocable<Observer&, const FlowState<Field>&, const StepReport&>
RunSummary run_until(FlowState<Field>& st, double clockEnd, const RunOptions& opt, Observer&& observer,
                     const BoundaryProvider* bp = nullptr) {
  RunSummary sum;
  std::vector<double> rate;
  while (st.clock() < clockEnd) {
    if (sum.steps >= opt.maxSteps) throw Error("run_until: step limit reached");
    StepReport r = probe(st, rate, opt.step);
    const double clockBefore = st.clock();
    const double remaining = clockEnd - clockBefore;
    const bool last = r.dtRequired >= remaining;
    const double dt = last ? remaining : r.dtRequired;
    detail::apply_step(st, dt, rate, opt.step, bp, last ? clockEnd : std::numeric_limits<double>::quiet_NaN());
    r.dtUsed = dt;
    r.cflRatio = dt / r.dtRequired;
    r.clockBefore = clockBefore;
    r.rates = rate;
    ++sum.steps;
    sum.minEigenvalue = std::min(sum.minEigenvalue, r.minEigenvalue);
    sum.maxCflRatio = std::max(sum.maxCflRatio, r.cflRatio);
    observer(st, r);
  }
  return sum;
}

template <class Field>
RunSummary run_until(FlowState<Field>& st, double clockEnd, const RunOptions& opt = {},
                     const BoundaryProvider* bp = nullptr) {
  return run_until(st, clockEnd, opt, [](const FlowState<Field>&, const StepReport&) {}, bp);
}

template <class Field>
struct StationaryResult {
  FlowState<Field> state;
  std::vector<double> tau;
  std::vector<double> residual;  ///< sup |H~| over interior nodes at each recorded tau
  std::vector<double> minResidual;
  bool converged = false;
  long steps = 0;
};

/// Iterates the normalized flow until sup |H~| <= tol or tau > maxTau. On
/// non-convergence the last state is returned with converged = false.
/// observer(state, report) sees every probed state before it is stepped.
template <class Field, class Observer>
  requires std::invocable<Observer&, const FlowState<Field>&, const StepReport&>
StationaryResult<Field> run_to_stationary(FlowState<Field> st, double tol, double maxTau, const RunOptions& opt,
                                          Observer&& observer) {
  if (st.formulation != Formulation::normalized) throw DomainError("run_to_stationary: state must be normalized");
  StationaryResult<Field> res;
  std::vector<double> rate;
  while (true) {
    StepReport r = probe(st, rate, opt.step);
    r.clockBefore = st.tau;
    r.rates = rate;
    observer(std::as_const(st), std::as_const(r));
    const double sup = std::max(std::abs(r.minResidual), std::abs(r.maxResidual));
    res.tau.push_back(st.tau);
    res.residual.push_back(sup);
    res.minResidual.push_back(r.minResidual);
    if (sup <= tol) {
      res.converged = true;
      break;
    }
    if (st.tau > maxTau || res.steps >= opt.maxSteps) break;
    detail::apply_step(st, r.dtRequired, rate, opt.step, nullptr);
    ++res.steps;
  }
  res.state = std::move(st);
  return res;
}

template <class Field>
StationaryResult<Field> run_to_stationary(FlowState<Field> st, double tol, double maxTau, const RunOptions& opt = {}) {
  return run_to_stationary(std::move(st), tol, maxTau, opt, [](const FlowState<Field>&, const StepReport&) {});
}

}  // namespace sigmak
