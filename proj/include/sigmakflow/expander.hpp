#pragma once
// Self-expanders sigma_k^{alpha/k}(kappa) = -<X, nu>: the hyperboloid, radial
// shooting for the ODE in u(rho), and pointwise residuals of numeric fields.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sigmakflow/errors.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/geometry.hpp"
#include "sigmakflow/symfunc.hpp"

namespace sigmak {

/// a = C(n,k)^{alpha/(k(1+alpha))}; sqrt(a^2 + |x|^2) is then an exact expander.
inline double hyperboloid_radius(const SpeedParams& p) {
  return std::pow(binomial(p.n, p.k), p.alpha / (p.k * (1.0 + p.alpha)));
}

struct ShootingOptions {
  double R = 50.0;
  double hOut = 1.0 / 128;
  int substeps = 1;         ///< RK4 steps per output interval
  double tol = 1e-11;       ///< on the matching functional
  int maxIterations = 200;
  double kappaBig = 1e3;
  bool richardson = true;   ///< repeat at 2R and report the difference in mu
  std::optional<double> guessLo, guessHi;  ///< initial shots; default brackets the hyperboloid
};

struct ExpanderSolution {
  RadialField profile;
  double c = 0.0;
  double mu = 0.0;
  double residual = 0.0;       ///< sup |sigma_k^{alpha/k} - s| by finite differences where w >= 1e-2
  double tailDifference = 0.0; ///< |mu(R) - mu(2R)|, NaN when not computed
  double R = 0.0;
  bool converged = false;
  int iterations = 0;
  double bracketLo = 0.0, bracketHi = 0.0;
};

namespace detail {

/// u'' from sigma_k(kappa) = s^{k/alpha} with kappa_rad = u''/w^3 (sigma_k is linear in it).
/// Safeguarded Newton on the bracket (0, kappaBig w^3).
inline double shooting_upp(const SpeedParams& p, double rho, double u, double up, double kappaBig) {
  const double g2 = up * up;
  if (!(g2 < 1.0)) throw SpacelikeError("shooting: |u'| >= 1", -1, g2);
  const double w = std::sqrt(1.0 - g2);
  const double s = (u - rho * up) / w;
  if (!(s > 0.0)) throw ConeError("shooting: support function is not positive");
  const double target = std::pow(s, p.k / p.alpha);
  if (rho == 0.0) {
    // umbilic pole: C(n,k) q^k = s^{k/alpha}
    return std::pow(target / binomial(p.n, p.k), 1.0 / p.k);
  }
  const double ka = up / (rho * w);
  const double w3 = w * w * w;
  auto g = [&](double q) { return sigma_rotational(p.k, p.n - 1, q / w3, ka) - target; };
  double lo = 0.0, hi = kappaBig * w3;
  const double glo = g(lo);
  if (!(glo < 0.0)) throw ConeError("shooting: u'' root not bracketed");
  // kappa_rad grows like c/w on tails with c > 0, so the initial bracket may have to widen
  double ghi = g(hi);
  for (int grow = 0; grow < 200 && !(ghi > 0.0); ++grow) {
    lo = hi;
    hi *= 4.0;
    ghi = g(hi);
  }
  if (!(ghi > 0.0)) throw ConeError("shooting: u'' root not bracketed");
  double q = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double gq = g(q);
    if (gq == 0.0) return q;
    if (gq < 0.0) lo = q;
    else hi = q;
    const double slope = sigma_repeated(p.k - 1, p.n - 1, ka) / w3;
    double next = (slope > 0.0) ? q - gq / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - q) <= 1e-15 * std::max(1.0, std::abs(q))) return next;
    q = next;
  }
  return q;
}

struct Trajectory {
  std::vector<double> u, up;  ///< on rho_i = i hOut
  double h = 0.0;
  bool ok = true;
  bool steep = false;  ///< left through |u'| -> 1 (or support collapse)
};

inline Trajectory shoot(const SpeedParams& p, double mu, double R, double hOut, int substeps, double kappaBig,
                        double stopSlope = 2.0) {
  Trajectory tr;
  tr.h = hOut;
  const int n = static_cast<int>(std::lround(R / hOut));
  const double dr = hOut / substeps;
  double rho = 0.0, u = mu, up = 0.0;
  tr.u.push_back(u);
  tr.up.push_back(up);
  auto rhs = [&](double r, double a, double b, double& da, double& db) {
    da = b;
    db = shooting_upp(p, r, a, b, kappaBig);
  };
  try {
    for (int i = 0; i < n; ++i) {
      for (int sub = 0; sub < substeps; ++sub) {
        double a1, b1, a2, b2, a3, b3, a4, b4;
        rhs(rho, u, up, a1, b1);
        rhs(rho + 0.5 * dr, u + 0.5 * dr * a1, up + 0.5 * dr * b1, a2, b2);
        rhs(rho + 0.5 * dr, u + 0.5 * dr * a2, up + 0.5 * dr * b2, a3, b3);
        rhs(rho + dr, u + dr * a3, up + dr * b3, a4, b4);
        u += dr * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0;
        up += dr * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0;
        rho = (i * substeps + sub + 1) * dr;
      }
      tr.u.push_back(u);
      tr.up.push_back(up);
      if (up >= stopSlope) break;
    }
  } catch (const SpacelikeError&) {
    tr.ok = false;
    tr.steep = true;
  } catch (const ConeError&) {
    tr.ok = false;
    tr.steep = true;
  }
  if (tr.ok && !(up < 1.0)) {
    tr.ok = false;
    tr.steep = true;
  }
  return tr;
}

/// Illinois (modified regula falsi) on a monotone increasing g; +-inf values force bisection.
template <class G>
double illinois(G&& g, double lo, double hi, double flo, double fhi, double tol, int maxIt, int& iterations,
                bool& converged, double& bLo, double& bHi) {
  converged = false;
  int side = 0;
  double x = 0.5 * (lo + hi);
  for (iterations = 0; iterations < maxIt; ++iterations) {
    if (std::isfinite(flo) && std::isfinite(fhi)) x = (lo * fhi - hi * flo) / (fhi - flo);
    else x = 0.5 * (lo + hi);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = g(x);
    if (std::abs(fx) <= tol || (hi - lo) <= 1e-15 * std::max(1.0, std::abs(x))) {
      converged = std::abs(fx) <= tol || (std::isfinite(flo) && std::isfinite(fhi) && std::isfinite(fx));
      break;
    }
    if (fx < 0.0) {
      lo = x;
      flo = fx;
      if (side == -1 && std::isfinite(fhi)) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1 && std::isfinite(flo)) flo *= 0.5;
      side = 1;
    }
  }
  bLo = lo;
  bHi = hi;
  return x;
}

/// Finds [lo, hi] with g(lo) < 0 < g(hi) by geometric expansion around the guesses.
template <class G>
bool bracket(G&& g, double& lo, double& hi, double& flo, double& fhi) {
  flo = g(lo);
  fhi = g(hi);
  for (int i = 0; i < 60 && !(flo < 0.0); ++i) {
    hi = lo;
    fhi = flo;
    lo *= 0.7;
    flo = g(lo);
  }
  for (int i = 0; i < 60 && !(fhi > 0.0); ++i) {
    lo = hi;
    flo = fhi;
    hi *= 1.3;
    fhi = g(hi);
  }
  return flo < 0.0 && fhi > 0.0;
}

inline double profile_residual(const RadialField& prof, const SpeedParams& p);

}  // namespace detail

/// Primal residual |sigma_k^{alpha/k}(kappa) - s| on every node of a radial graph.
/// Flat or non-convex input propagates ConeError.
inline RadialField expander_residual(const RadialField& u, const SpeedParams& p) {
  const auto curv = primal_curvature(u, p);
  RadialField out{u.h, std::vector<double>(curv.size())};
  for (size_t i = 0; i < curv.size(); ++i)
    out.values[i] = std::abs(speed_F_alpha(p, curv[i].kappa_span()) - curv[i].support);
  return out;
}

/// Dual residual |F_*^{-alpha}(M) w* + u*| on the nodes 0..N-1 (NaN at the boundary node).
inline RadialField expander_residual_dual(const RadialField& us, const SpeedParams& p) {
  const DualCurvatureField dc = dual_curvature_matrix(us, p);
  RadialField out{us.h, std::vector<double>(us.values.size(), std::numeric_limits<double>::quiet_NaN())};
  for (size_t r = 0; r < dc.size(); ++r) {
    const long i = dc.nodes[r];
    const double s = us.radius_at(static_cast<int>(i));
    const double F = speed_F_star(p, dc.radii(r));
    out.values[i] = std::abs(std::pow(F, -p.alpha) * std::sqrt(1.0 - s * s) + us.values[i]);
  }
  return out;
}

/// Ball version on interior nodes (NaN elsewhere).
inline BallField2D expander_residual(const BallField2D& us, const SpeedParams& p) {
  const DualCurvatureField dc = dual_curvature_matrix(us, p);
  BallField2D out = BallField2D::make(us.r, us.h);
  for (size_t r = 0; r < dc.size(); ++r) {
    const long idx = dc.nodes[r];
    const double x = us.node_i(idx) * us.h, y = us.node_j(idx) * us.h;
    const double F = speed_F_star(p, dc.radii(r));
    out.values[idx] = std::abs(std::pow(F, -p.alpha) * std::sqrt(1.0 - x * x - y * y) + us.values[idx]);
  }
  return out;
}

namespace detail {

/// Residual over the part of the profile with w >= 1e-2; beyond it the graph is
/// numerically null and finite differences of kappa ~ u''/w^3 carry no information.
inline double profile_residual(const RadialField& prof, const SpeedParams& p) {
  int last = 0;
  for (int i = 1; i < prof.intervals(); ++i) {
    const double d1 = derivatives_1d(prof.values, i, prof.h, true).d1;
    if (1.0 - d1 * d1 < 1e-4) break;
    last = i;
  }
  RadialField head{prof.h, std::vector<double>(prof.values.begin(), prof.values.begin() + last + 2)};
  const RadialField r = expander_residual(head, p);
  double m = 0.0;
  for (int i = 0; i < r.intervals(); ++i) m = std::max(m, r.values[i]);
  return m;
}

inline ExpanderSolution shoot_to_asymptote(const SpeedParams& p, double c, const ShootingOptions& o) {
  const double a = hyperboloid_radius(p);
  // hyperboloidal tail: u ~ sqrt(rho^2 + b^2) + c has u - rho/u' -> c exactly
  auto g = [&](double mu) {
    const Trajectory tr = shoot(p, mu, o.R, o.hOut, o.substeps, o.kappaBig);
    if (!tr.ok) return tr.steep ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    if (tr.u.size() * o.hOut < o.R) return std::numeric_limits<double>::infinity();
    const double uR = tr.u.back(), upR = tr.up.back();
    return (uR - o.R / upR) - c;
  };
  double lo = o.guessLo.value_or(a + c * 0.5), hi = o.guessHi.value_or(a + c + 0.5);
  if (lo > hi) std::swap(lo, hi);
  double flo, fhi;
  if (!bracket(g, lo, hi, flo, fhi)) throw ConeError("solve_radial_shooting: could not bracket mu");
  ExpanderSolution sol;
  sol.c = c;
  sol.R = o.R;
  sol.mu = illinois(g, lo, hi, flo, fhi, o.tol, o.maxIterations, sol.iterations, sol.converged, sol.bracketLo,
                    sol.bracketHi);
  const Trajectory tr = shoot(p, sol.mu, o.R, o.hOut, o.substeps, o.kappaBig);
  sol.profile.h = o.hOut;
  sol.profile.values = tr.u;
  return sol;
}

}  // namespace detail

/// Radial expander with asymptotic constant c: u(rho) - rho -> c. The matching
/// functional is u(R) - R/u'(R), exact on hyperboloidal tails.
inline ExpanderSolution solve_radial_shooting(const SpeedParams& p, double c, const ShootingOptions& o = {}) {
  p.validate();
  if (!(c >= 0.0)) throw DomainError("solve_radial_shooting: c must be >= 0");
  ExpanderSolution sol = detail::shoot_to_asymptote(p, c, o);
  sol.residual = detail::profile_residual(sol.profile, p);
  sol.tailDifference = std::numeric_limits<double>::quiet_NaN();
  if (o.richardson) {
    ShootingOptions o2 = o;
    o2.R = 2 * o.R;
    o2.guessLo = sol.mu * (1 - 1e-3);
    o2.guessHi = sol.mu * (1 + 1e-3);
    sol.tailDifference = std::abs(detail::shoot_to_asymptote(p, c, o2).mu - sol.mu);
  }
  return sol;
}

/// Dual value of a radial graph at |xi| = s: rho s - u(rho) where u'(rho) = s (linear in the bracketing cell).
inline double dual_value_at(const std::vector<double>& u, const std::vector<double>& up, double h, double s) {
  for (size_t i = 1; i < up.size(); ++i) {
    if (up[i] >= s) {
      const double th = (s - up[i - 1]) / (up[i] - up[i - 1]);
      // the Legendre value is stationary in rho: an O(h^2) rho and a cubic Hermite u give O(h^4)
      const double rho = (i - 1 + th) * h;
      const double t2 = th * th, t3 = t2 * th;
      const double uu = (2 * t3 - 3 * t2 + 1) * u[i - 1] + (t3 - 2 * t2 + th) * h * up[i - 1] +
                        (-2 * t3 + 3 * t2) * u[i] + (t3 - t2) * h * up[i];
      return rho * s - uu;
    }
  }
  throw DomainError("dual_value_at: slope never reached");
}

/// Radial expander whose Legendre transform takes the value `target` at |xi| = r:
/// the stationary limit of the normalized flow on B_r with constant Dirichlet data.
inline ExpanderSolution solve_radial_shooting_dual(const SpeedParams& p, double r, double target,
                                                   const ShootingOptions& o = {}) {
  p.validate();
  if (!(r > 0.0 && r < 1.0)) throw DomainError("solve_radial_shooting_dual: r must lie in (0, 1)");
  auto g = [&](double mu) {
    const detail::Trajectory tr = detail::shoot(p, mu, o.R, o.hOut, o.substeps, o.kappaBig, r + 1e-3);
    if (!tr.ok && tr.up.back() < r) return -std::numeric_limits<double>::infinity();
    if (tr.up.back() < r) return std::numeric_limits<double>::quiet_NaN();
    // u* decreases in mu; return an increasing function
    return target - dual_value_at(tr.u, tr.up, o.hOut, r);
  };
  const double a = hyperboloid_radius(p);
  double lo = o.guessLo.value_or(a), hi = o.guessHi.value_or(a + 1.0);
  double flo, fhi;
  if (!detail::bracket(g, lo, hi, flo, fhi)) throw ConeError("solve_radial_shooting_dual: could not bracket mu");
  ExpanderSolution sol;
  sol.R = o.R;
  sol.mu = detail::illinois(g, lo, hi, flo, fhi, o.tol, o.maxIterations, sol.iterations, sol.converged,
                            sol.bracketLo, sol.bracketHi);
  const detail::Trajectory tr = detail::shoot(p, sol.mu, o.R, o.hOut, o.substeps, o.kappaBig);
  sol.profile.h = o.hOut;
  sol.profile.values = tr.u;
  sol.c = tr.u.back() - o.R / tr.up.back();
  sol.residual = detail::profile_residual(sol.profile, p);
  sol.tailDifference = std::numeric_limits<double>::quiet_NaN();
  return sol;
}

}  // namespace sigmak
