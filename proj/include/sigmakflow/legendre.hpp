#pragma once
// Discrete Legendre transform u*(xi) = sup_x (x.xi - u(x)) between convex
// spacelike graphs and dual potentials on the unit ball.
//
// The sup over grid nodes is exact; a local quadratic (Newton) step on the
// nodal finite-difference model then refines it. The refined value is kept
// only when it exceeds the grid value, so the discrete Young inequality
// u(x) + u*(xi) >= x.xi holds at every pair of grid nodes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sigmakflow/errors.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/geometry.hpp"

namespace sigmak {

namespace detail {

inline void require_convex_1d(const std::vector<double>& v, const char* who) {
  const int n = static_cast<int>(v.size()) - 1;
  for (int i = 0; i < n; ++i) {
    const double left = (i == 0) ? v[1] : v[i - 1];
    const double d2 = v[i + 1] - 2 * v[i] + left;
    if (!(d2 > 0.0)) throw ConvexityError(std::string(who) + ": input is not strictly convex", i);
  }
}

/// Conjugate of an even function sampled on rho_i = i h, evaluated at s_j = j hOut, j = 0..nOut.
/// The largest maximizer of rho s - f(rho) is nondecreasing in s, so the scan resumes at the previous one.
inline std::vector<double> conjugate_even_1d(const std::vector<double>& f, double h, double hOut, int nOut,
                                             bool refine, const char* who) {
  const int n = static_cast<int>(f.size()) - 1;
  std::vector<double> out(nOut + 1);
  int best = 0;
  for (int j = 0; j <= nOut; ++j) {
    const double s = j * hOut;
    double bv = -std::numeric_limits<double>::infinity();
    int bi = best;
    for (int i = best; i <= n; ++i) {
      const double val = i * h * s - f[i];
      if (val >= bv) {
        bv = val;
        bi = i;
      }
    }
    best = bi;
    if (bi == n) {
      const double slope = (3 * f[n] - 4 * f[n - 1] + f[n - 2]) / (2 * h);
      if (s > slope * (1.0 + 1e-12)) throw DomainError(std::string(who) + ": target point outside the discrete gradient image");
    }
    double value = bv;
    if (refine && bi < n) {
      const double left = (bi == 0) ? f[1] : f[bi - 1];
      const double d1 = (f[bi + 1] - left) / (2 * h);
      const double d2 = (f[bi + 1] - 2 * f[bi] + left) / (h * h);
      if (d2 > 0.0) {
        const double delta = std::clamp((s - d1) / d2, -h, h);
        const double cand = (bi * h + delta) * s - (f[bi] + d1 * delta + 0.5 * d2 * delta * delta);
        value = std::max(value, cand);
      }
    }
    out[j] = value;
  }
  return out;
}

/// Separable 2D conjugate on rectangular node sets. f is side x side (row-major,
/// NaN = excluded, i.e. +infinity). Output on outSide x outSide with spacing hOut,
/// centred at the origin. For each output node the maximizing input node is stored.
struct Conjugate2D {
  std::vector<double> value;
  std::vector<long> argmax;
};

inline Conjugate2D conjugate_2d(const std::vector<double>& f, int m, double h, int mOut, double hOut) {
  const int side = 2 * m + 1, sideOut = 2 * mOut + 1;
  const double ninf = -std::numeric_limits<double>::infinity();
  // row pass: g(a, q) = max_b (y_b eta_q - f(a, b))
  std::vector<double> g(static_cast<size_t>(side) * sideOut, ninf);
  std::vector<int> gArg(g.size(), -1);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < side; ++a)
    for (int q = 0; q < sideOut; ++q) {
      const double eta = (q - mOut) * hOut;
      double bv = ninf;
      int bb = -1;
      for (int b = 0; b < side; ++b) {
        const double fv = f[static_cast<size_t>(a) * side + b];
        if (std::isnan(fv)) continue;
        const double val = (b - m) * h * eta - fv;
        if (val > bv) {
          bv = val;
          bb = b;
        }
      }
      g[static_cast<size_t>(a) * sideOut + q] = bv;
      gArg[static_cast<size_t>(a) * sideOut + q] = bb;
    }
  Conjugate2D out;
  out.value.assign(static_cast<size_t>(sideOut) * sideOut, ninf);
  out.argmax.assign(out.value.size(), -1);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < sideOut; ++p) {
    const double xi = (p - mOut) * hOut;
    for (int q = 0; q < sideOut; ++q) {
      double bv = ninf;
      int ba = -1;
      for (int a = 0; a < side; ++a) {
        const double gv = g[static_cast<size_t>(a) * sideOut + q];
        if (gv == ninf) continue;
        const double val = (a - m) * h * xi + gv;
        if (val > bv) {
          bv = val;
          ba = a;
        }
      }
      const size_t o = static_cast<size_t>(p) * sideOut + q;
      out.value[o] = bv;
      if (ba >= 0) out.argmax[o] = static_cast<long>(ba) * side + gArg[static_cast<size_t>(ba) * sideOut + q];
    }
  }
  return out;
}

/// One clamped Newton step of x.xi - u on the local quadratic model at node (a, b).
/// Returns -inf when the stencil is incomplete or the Hessian is not positive definite.
template <class At>
double newton_refine_2d(At&& at, int a, int b, double h, double xi1, double xi2, double x1, double x2) {
  const double c = at(a, b);
  const double e = at(a + 1, b), w = at(a - 1, b), n = at(a, b + 1), s = at(a, b - 1);
  const double ne = at(a + 1, b + 1), nw = at(a - 1, b + 1), se = at(a + 1, b - 1), sw = at(a - 1, b - 1);
  const double ninf = -std::numeric_limits<double>::infinity();
  for (double v : {c, e, w, n, s, ne, nw, se, sw})
    if (std::isnan(v)) return ninf;
  const double g1 = (e - w) / (2 * h), g2 = (n - s) / (2 * h);
  const double h11 = (e - 2 * c + w) / (h * h), h22 = (n - 2 * c + s) / (h * h);
  const double h12 = (ne - nw - se + sw) / (4 * h * h);
  const double det = h11 * h22 - h12 * h12;
  if (!(h11 > 0.0 && det > 0.0)) return ninf;
  const double r1 = xi1 - g1, r2 = xi2 - g2;
  const double d1 = std::clamp((h22 * r1 - h12 * r2) / det, -h, h);
  const double d2 = std::clamp((h11 * r2 - h12 * r1) / det, -h, h);
  const double model = c + g1 * d1 + g2 * d2 + 0.5 * (h11 * d1 * d1 + 2 * h12 * d1 * d2 + h22 * d2 * d2);
  return (x1 + d1) * xi1 + (x2 + d2) * xi2 - model;
}

}  // namespace detail

/// Radial transform onto [0, r] with `intervals` cells.
inline RadialField legendre_transform(const RadialField& u, double r, int intervals, bool refine = true) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("legendre_transform: dual radius must lie in (0, 1)");
  // only nodes whose slope reaches r (plus a stencil's worth) can maximize x s - u for s <= r
  int last = u.intervals();
  for (int i = 1; i < u.intervals(); ++i)
    if (derivatives_1d(u.values, i, u.h, true).d1 > r) {
      last = std::min(u.intervals(), i + 3);
      break;
    }
  const std::vector<double> used(u.values.begin(), u.values.begin() + last + 1);
  detail::require_convex_1d(used, "legendre_transform");
  for (int i = 0; i <= last; ++i) {
    const Deriv d = derivatives_1d(u.values, i, u.h, true);
    if (!(d.d1 * d.d1 < 1.0)) throw SpacelikeError("legendre_transform: input is not spacelike", i, d.d1 * d.d1);
  }
  RadialField out;
  out.h = r / intervals;
  out.values = detail::conjugate_even_1d(used, u.h, out.h, intervals, refine, "legendre_transform");
  return out;
}

/// Radial inverse onto [0, R]; R must lie inside the gradient image [0, u*'(r)].
inline RadialField legendre_inverse(const RadialField& us, double R, int intervals, bool refine = true) {
  if (!(R > 0.0)) throw DomainError("legendre_inverse: radius must be positive");
  detail::require_convex_1d(us.values, "legendre_inverse");
  RadialField out;
  out.h = R / intervals;
  out.values = detail::conjugate_even_1d(us.values, us.h, out.h, intervals, refine, "legendre_inverse");
  return out;
}

/// Largest radius reachable by legendre_inverse: the one-sided slope at the outer node.
inline double gradient_image_radius(const RadialField& f) {
  return derivatives_1d(f.values, f.intervals(), f.h, true).d1;
}

namespace detail {

inline void require_convex_2d(const std::vector<double>& v, int m, double h, const char* who,
                              const std::vector<Cell>* cells = nullptr) {
  const int side = 2 * m + 1;
  auto at = [&](int i, int j) { return v[static_cast<size_t>(i + m) * side + (j + m)]; };
  for (int i = -m + 1; i < m; ++i)
    for (int j = -m + 1; j < m; ++j) {
      const long idx = static_cast<long>(i + m) * side + (j + m);
      if (cells && (*cells)[idx] != Cell::interior) continue;
      const double c = at(i, j);
      const double h11 = at(i + 1, j) - 2 * c + at(i - 1, j);
      const double h22 = at(i, j + 1) - 2 * c + at(i, j - 1);
      const double h12 = 0.25 * (at(i + 1, j + 1) - at(i - 1, j + 1) - at(i + 1, j - 1) + at(i - 1, j - 1));
      if (!(h11 > 0.0 && h11 * h22 - h12 * h12 > 0.0)) throw ConvexityError(std::string(who) + ": input is not strictly convex", idx);
    }
  (void)h;
}

}  // namespace detail

/// 2D transform of a square-grid graph onto the ball mask (r, hOut).
inline BallField2D legendre_transform(const GridField2D& u, double r, double hOut, bool refine = true) {
  detail::require_convex_2d(u.values, u.m, u.h, "legendre_transform");
  BallField2D out = BallField2D::make(r, hOut);
  const detail::Conjugate2D c = detail::conjugate_2d(u.values, u.m, u.h, out.m, out.h);
  const int side = u.side();
  for (int i = -out.m; i <= out.m; ++i)
    for (int j = -out.m; j <= out.m; ++j) {
      if (out.cell(i, j) == Cell::outside) continue;
      const long o = out.index(i, j);
      const long arg = c.argmax[o];
      const int a = static_cast<int>(arg / side) - u.m, b = static_cast<int>(arg % side) - u.m;
      if (std::abs(a) == u.m || std::abs(b) == u.m)
        throw DomainError("legendre_transform: ball not contained in the discrete gradient image");
      double value = c.value[o];
      if (refine) {
        const double cand = detail::newton_refine_2d([&](int p, int q) { return u.at(p, q); }, a, b, u.h, i * out.h,
                                                     j * out.h, a * u.h, b * u.h);
        value = std::max(value, cand);
      }
      out.at(i, j) = value;
    }
  return out;
}

/// 2D inverse onto a square grid of half-width L. Nodes whose maximizer is not an
/// interior ball node lie outside the gradient image and are set to NaN.
inline GridField2D legendre_inverse(const BallField2D& us, double halfWidth, double hOut, bool refine = true) {
  detail::require_convex_2d(us.values, us.m, us.h, "legendre_inverse", &us.cells);
  bool anyInterior = false;
  for (Cell c : us.cells) anyInterior = anyInterior || c == Cell::interior;
  if (!anyInterior) throw ConvexityError("legendre_inverse: empty ball", -1);
  GridField2D out = GridField2D::sample(halfWidth, hOut, [](double, double) { return 0.0; });
  const detail::Conjugate2D c = detail::conjugate_2d(us.values, us.m, us.h, out.m, out.h);
  for (int i = -out.m; i <= out.m; ++i)
    for (int j = -out.m; j <= out.m; ++j) {
      const long o = out.index(i, j);
      const long arg = c.argmax[o];
      if (arg < 0 || us.cells[arg] != Cell::interior) {
        out.at(i, j) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const int a = us.node_i(arg), b = us.node_j(arg);
      double value = c.value[o];
      if (refine) {
        const double cand = detail::newton_refine_2d([&](int p, int q) { return us.at(p, q); }, a, b, us.h, i * out.h,
                                                     j * out.h, a * us.h, b * us.h);
        value = std::max(value, cand);
      }
      out.at(i, j) = value;
    }
  return out;
}

struct LegendrePair {
  RadialField primal;
  RadialField dual;
  double matchError = 0.0;
};

/// Transform plus the sup of |u(x) + u*(Du(x)) - x Du(x)| over primal nodes with Du(x) <= r.
inline LegendrePair make_legendre_pair(const RadialField& u, double r, int intervals, double tolerance) {
  LegendrePair p{u, legendre_transform(u, r, intervals), 0.0};
  for (int i = 0; i < u.intervals(); ++i) {
    const double g = derivatives_1d(u.values, i, u.h, true).d1;
    if (g > r) break;
    const double rho = u.radius_at(i);
    p.matchError = std::max(p.matchError, std::abs(u.values[i] + p.dual.interpolate(g) - rho * g));
  }
  if (!(p.matchError <= tolerance)) throw DomainError("make_legendre_pair: match error above tolerance");
  return p;
}

struct TraceResult {
  std::vector<double> theta;
  std::vector<double> phi;
  double maxDisagreement = 0.0;
  bool unstable = false;
};

namespace detail {

/// Linear extrapolation to w* = 0 from samples (w*_a, v_a), (w*_b, v_b).
inline double extrapolate_to_rim(double sa, double va, double sb, double vb) {
  const double wa = std::sqrt(1.0 - sa * sa), wb = std::sqrt(1.0 - sb * sb);
  return va - wa * (vb - va) / (wb - wa);
}

}  // namespace detail

/// phi = -u*|_{|xi|=1} / A for a radial dual field (single value). The trace is
/// extrapolated from the outer two nodes; the next pair provides the stability check.
inline TraceResult boundary_trace(const RadialField& us, double A, double tolerance = 1e-3) {
  if (!(A > 0.0)) throw DomainError("boundary_trace: A must be positive");
  const int n = us.intervals();
  if (n < 3) throw DomainError("boundary_trace: need at least three intervals");
  const double s0 = us.radius_at(n), s1 = us.radius_at(n - 1), s2 = us.radius_at(n - 2);
  if (!(s0 < 1.0)) throw DomainError("boundary_trace: |xi| >= 1");
  const double outer = detail::extrapolate_to_rim(s0, us.values[n], s1, us.values[n - 1]);
  const double inner = detail::extrapolate_to_rim(s1, us.values[n - 1], s2, us.values[n - 2]);
  TraceResult t;
  t.theta = {0.0};
  t.phi = {-outer / A};
  t.maxDisagreement = std::abs(outer - inner) / A;
  t.unstable = t.maxDisagreement > tolerance;
  return t;
}

/// Ball version sampled at `angles` equally spaced directions, using radii r - h, r - 2h, r - 3h.
inline TraceResult boundary_trace(const BallField2D& us, double A, int angles = 64, double tolerance = 1e-3) {
  if (!(A > 0.0)) throw DomainError("boundary_trace: A must be positive");
  if (angles < 1) throw DomainError("boundary_trace: need at least one direction");
  TraceResult t;
  const double pi = std::acos(-1.0);
  const std::array<double, 3> radii{us.r - us.h, us.r - 2 * us.h, us.r - 3 * us.h};
  if (!(radii[2] > 0.0)) throw DomainError("boundary_trace: ball too small for the grid");
  for (int a = 0; a < angles; ++a) {
    const double th = 2 * pi * a / angles;
    std::array<double, 3> v{};
    for (int q = 0; q < 3; ++q) v[q] = us.interpolate(radii[q] * std::cos(th), radii[q] * std::sin(th));
    const double outer = detail::extrapolate_to_rim(radii[0], v[0], radii[1], v[1]);
    const double inner = detail::extrapolate_to_rim(radii[1], v[1], radii[2], v[2]);
    t.theta.push_back(th);
    t.phi.push_back(-outer / A);
    t.maxDisagreement = std::max(t.maxDisagreement, std::abs(outer - inner) / A);
  }
  t.unstable = !(t.maxDisagreement <= tolerance);
  return t;
}

}  // namespace sigmak
