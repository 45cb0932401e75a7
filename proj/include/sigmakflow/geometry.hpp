#pragma once
// Discrete differential geometry of spacelike graphs in R^{n,1} and of their
// Legendre duals on the unit ball.
//
// Primal graph u: w = sqrt(1 - |Du|^2), gamma^{ik} = delta_ik + u_i u_k / (w (1 + w)),
// curvature matrix (1/w) gamma D^2u gamma, support s = -<X, nu> = (u - x.Du) / w, tilt 1/w.
// Dual potential u*: w* = sqrt(1 - |xi|^2), gamma*_{ik} = delta_ik - xi_i xi_k / (1 + w*),
// radii matrix w* gamma* D^2u* gamma*, whose eigenvalues are the principal radii 1/kappa.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sigmakflow/errors.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/linalg.hpp"
#include "sigmakflow/symfunc.hpp"

namespace sigmak {

/// |Du|^2 may not exceed 1 - kSpacelikeGuard.
inline constexpr double kSpacelikeGuard = 1e-6;

struct Deriv {
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Second-order first and second derivatives of grid data at node i. Central in
/// the interior, one-sided at the ends; `evenAtZero` mirrors across node 0.
inline Deriv derivatives_1d(std::span<const double> v, int i, double h, bool evenAtZero) {
  const int n = static_cast<int>(v.size()) - 1;
  const double h2 = h * h;
  if (i > 0 && i < n) return {(v[i + 1] - v[i - 1]) / (2 * h), (v[i + 1] - 2 * v[i] + v[i - 1]) / h2};
  if (i == 0) {
    if (evenAtZero) return {0.0, 2.0 * (v[1] - v[0]) / h2};
    return {(-3 * v[0] + 4 * v[1] - v[2]) / (2 * h), (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h2};
  }
  return {(3 * v[n] - 4 * v[n - 1] + v[n - 2]) / (2 * h), (2 * v[n] - 5 * v[n - 1] + 4 * v[n - 2] - v[n - 3]) / h2};
}

struct RadialCurvature {
  double kappaRad = 0.0;
  double kappaAng = 0.0;
  double w = 1.0;
  double support = 0.0;
};

/// Radial graph u(rho): kappa_rad = u''/w^3, kappa_ang = u'/(rho w) (limit u''(0)/w^3 at the pole).
inline RadialCurvature radial_curvature_closed_form(double u, double up, double upp, double rho, int n) {
  if (n < 1) throw DomainError("radial_curvature_closed_form: n must be >= 1");
  const double g2 = up * up;
  if (!(g2 <= 1.0 - kSpacelikeGuard)) throw SpacelikeError("radial graph is not spacelike", -1, g2);
  const double w = std::sqrt(1.0 - g2);
  RadialCurvature c;
  c.w = w;
  c.kappaRad = upp / (w * w * w);
  c.kappaAng = (rho > 0.0) ? up / (rho * w) : c.kappaRad;
  c.support = (u - rho * up) / w;
  return c;
}

/// Per-point curvature package. Arrays hold the first n entries; the matrix is n x n row-major.
struct CurvatureData {
  int n = 0;
  CurvatureArray grad{};
  double w = 1.0;
  std::array<double, kMaxDim * kMaxDim> curvMatrix{};
  CurvatureArray kappa{};  ///< descending
  double support = 0.0;
  double tilt = 1.0;

  std::span<const double> kappa_span() const { return {kappa.data(), static_cast<size_t>(n)}; }
};

/// Curvature of a radial graph on its grid. Radial derivatives use the even
/// extension at the pole and one-sided stencils at the outer end.
inline std::vector<CurvatureData> primal_curvature(const RadialField& u, const SpeedParams& p) {
  p.validate();
  const int nn = u.intervals();
  std::vector<CurvatureData> out(nn + 1);
  for (int i = 0; i <= nn; ++i) {
    const Deriv d = derivatives_1d(u.values, i, u.h, true);
    const double rho = u.radius_at(i);
    if (!(d.d1 * d.d1 <= 1.0 - kSpacelikeGuard)) throw SpacelikeError("primal_curvature: spacelike guard violated", i, d.d1 * d.d1);
    const RadialCurvature c = radial_curvature_closed_form(u.values[i], d.d1, d.d2, rho, p.n);
    CurvatureData& cd = out[i];
    cd.n = p.n;
    cd.grad[0] = d.d1;
    cd.w = c.w;
    cd.support = c.support;
    cd.tilt = 1.0 / c.w;
    cd.curvMatrix[0] = c.kappaRad;
    for (int j = 1; j < p.n; ++j) cd.curvMatrix[j * p.n + j] = c.kappaAng;
    cd.kappa[0] = c.kappaRad;
    for (int j = 1; j < p.n; ++j) cd.kappa[j] = c.kappaAng;
    std::sort(cd.kappa.begin(), cd.kappa.begin() + p.n, std::greater<>());
  }
  return out;
}

namespace detail {

/// Gradient and Hessian of a Cartesian grid function at node (i, j). Each
/// axis uses central differences when both neighbours are valid and second
/// order one-sided stencils otherwise. `valid(i, j)` reports usable nodes.
template <class At, class Valid>
bool grid_derivatives(At&& at, Valid&& valid, int i, int j, double h, std::array<double, 2>& g,
                      SymMatrix<2>& hess) {
  auto axis = [&](auto&& f, int c, bool& ok) -> Deriv {
    std::array<double, 5> s{};
    const bool lo = valid(c - 1), hi = valid(c + 1);
    if (lo && hi) {
      s = {f(c - 1), f(c), f(c + 1)};
      return {(s[2] - s[0]) / (2 * h), (s[2] - 2 * s[1] + s[0]) / (h * h)};
    }
    if (hi && valid(c + 2) && valid(c + 3)) {
      const double a = f(c), b = f(c + 1), d = f(c + 2), e = f(c + 3);
      return {(-3 * a + 4 * b - d) / (2 * h), (2 * a - 5 * b + 4 * d - e) / (h * h)};
    }
    if (lo && valid(c - 2) && valid(c - 3)) {
      const double a = f(c), b = f(c - 1), d = f(c - 2), e = f(c - 3);
      return {(3 * a - 4 * b + d) / (2 * h), (2 * a - 5 * b + 4 * d - e) / (h * h)};
    }
    ok = false;
    return {};
  };
  bool ok = true;
  const Deriv dx = axis([&](int a) { return at(a, j); }, i, ok);
  const Deriv dy = axis([&](int b) { return at(i, b); }, j, ok);
  if (!ok) return false;
  // mixed derivative: d/dx of the y-derivative, each one second order
  auto dyAt = [&](int a) {
    bool okY = true;
    const Deriv d = axis([&](int b) { return at(a, b); }, j, okY);
    if (!okY) ok = false;
    return d.d1;
  };
  Deriv dxy{};
  if (valid(i - 1) && valid(i + 1)) {
    dxy.d1 = (dyAt(i + 1) - dyAt(i - 1)) / (2 * h);
  } else if (valid(i + 1) && valid(i + 2)) {
    dxy.d1 = (-3 * dyAt(i) + 4 * dyAt(i + 1) - dyAt(i + 2)) / (2 * h);
  } else if (valid(i - 1) && valid(i - 2)) {
    dxy.d1 = (3 * dyAt(i) - 4 * dyAt(i - 1) + dyAt(i - 2)) / (2 * h);
  } else {
    return false;
  }
  if (!ok) return false;
  g = {dx.d1, dy.d1};
  hess(0, 0) = dx.d2;
  hess(1, 1) = dy.d2;
  hess(0, 1) = hess(1, 0) = dxy.d1;
  return true;
}

}  // namespace detail

/// Curvature of a graph sampled on a square grid (n = 2). Edge nodes use one-sided stencils.
inline std::vector<CurvatureData> primal_curvature(const GridField2D& u, const SpeedParams& p) {
  p.validate();
  if (p.n != 2) throw DomainError("primal_curvature(GridField2D): n must be 2");
  const int m = u.m;
  std::vector<CurvatureData> out(u.values.size());
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      std::array<double, 2> g{};
      SymMatrix<2> hess;
      auto valid = [&](int c) { return c >= -m && c <= m; };
      // axis validity is symmetric in the square grid, so one predicate serves both axes
      detail::grid_derivatives([&](int a, int b) { return u.at(a, b); }, valid, i, j, u.h, g, hess);
      const double g2 = g[0] * g[0] + g[1] * g[1];
      const long idx = u.index(i, j);
      if (!(g2 <= 1.0 - kSpacelikeGuard)) throw SpacelikeError("primal_curvature: spacelike guard violated", idx, g2);
      const double w = std::sqrt(1.0 - g2);
      SymMatrix<2> gamma;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) gamma(a, b) = (a == b ? 1.0 : 0.0) + g[a] * g[b] / (w * (1.0 + w));
      SymMatrix<2> cm = sandwich(gamma, hess);
      for (double& x : cm.a) x /= w;
      const Eigen<2> e = jacobi_eigen(cm);
      CurvatureData& cd = out[idx];
      cd.n = 2;
      cd.grad[0] = g[0];
      cd.grad[1] = g[1];
      cd.w = w;
      cd.tilt = 1.0 / w;
      cd.support = (u.at(i, j) - (i * u.h * g[0] + j * u.h * g[1])) / w;
      cd.curvMatrix = {cm(0, 0), cm(0, 1), cm(1, 0), cm(1, 1)};
      cd.kappa[0] = e.values[0];
      cd.kappa[1] = e.values[1];
    }
  return out;
}

/// Principal radii of a radial dual potential: (w*^3 u*'', w* u*'/s repeated n-1 times).
struct RadialRadii {
  double radial = 0.0;
  double angular = 0.0;
};

inline RadialRadii radial_dual_radii(double s, double d1, double d2) {
  if (!(s < 1.0)) throw DomainError("radial_dual_radii: |xi| >= 1");
  const double ws = std::sqrt(1.0 - s * s);
  RadialRadii r;
  r.radial = ws * ws * ws * d2;
  r.angular = (s > 0.0) ? ws * d1 / s : d2;
  return r;
}

/// w* gamma* H gamma* at xi (n = 2).
inline SymMatrix<2> dual_radii_matrix(double x, double y, const SymMatrix<2>& hess) {
  const double s2 = x * x + y * y;
  if (!(s2 < 1.0)) throw DomainError("dual_radii_matrix: |xi| >= 1");
  const double ws = std::sqrt(1.0 - s2);
  const std::array<double, 2> xi{x, y};
  SymMatrix<2> gs;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) gs(a, b) = (a == b ? 1.0 : 0.0) - xi[a] * xi[b] / (1.0 + ws);
  SymMatrix<2> mm = sandwich(gs, hess);
  for (double& v : mm.a) v *= ws;
  return mm;
}

/// Dual curvature on every evaluated node, structure of arrays.
struct DualCurvatureField {
  int n = 0;
  std::vector<long> nodes;       ///< grid index of each record
  std::vector<double> lambda;    ///< n per record, descending
  std::vector<double> matrix;    ///< n*n per record
  std::vector<std::uint8_t> positive;

  size_t size() const { return nodes.size(); }
  std::span<const double> radii(size_t r) const { return {lambda.data() + r * n, static_cast<size_t>(n)}; }
  bool all_positive() const {
    return std::all_of(positive.begin(), positive.end(), [](std::uint8_t f) { return f != 0; });
  }
};

/// Radial dual potential on [0, r]: every node except the outer (Dirichlet) one.
inline DualCurvatureField dual_curvature_matrix(const RadialField& us, const SpeedParams& p, bool includeBoundary = false) {
  p.validate();
  DualCurvatureField f;
  f.n = p.n;
  const int last = us.intervals() - (includeBoundary ? 0 : 1);
  for (int i = 0; i <= last; ++i) {
    const Deriv d = derivatives_1d(us.values, i, us.h, true);
    const RadialRadii rr = radial_dual_radii(us.radius_at(i), d.d1, d.d2);
    f.nodes.push_back(i);
    const size_t base = f.lambda.size();
    f.lambda.resize(base + p.n);
    f.matrix.resize(f.matrix.size() + static_cast<size_t>(p.n) * p.n, 0.0);
    double* mtx = f.matrix.data() + (f.nodes.size() - 1) * p.n * p.n;
    mtx[0] = rr.radial;
    for (int j = 1; j < p.n; ++j) mtx[j * p.n + j] = rr.angular;
    f.lambda[base] = rr.radial;
    for (int j = 1; j < p.n; ++j) f.lambda[base + j] = rr.angular;
    std::sort(f.lambda.begin() + base, f.lambda.end(), std::greater<>());
    f.positive.push_back(f.lambda[base + p.n - 1] > 0.0 ? 1 : 0);
  }
  return f;
}

/// Ball grid (n = 2): interior nodes only; the ring is Dirichlet data.
inline DualCurvatureField dual_curvature_matrix(const BallField2D& us, const SpeedParams& p) {
  p.validate();
  if (p.n != 2) throw DomainError("dual_curvature_matrix(BallField2D): n must be 2");
  DualCurvatureField f;
  f.n = 2;
  for (int i = -us.m; i <= us.m; ++i)
    for (int j = -us.m; j <= us.m; ++j) {
      if (us.cell(i, j) != Cell::interior) continue;
      const double h = us.h;
      SymMatrix<2> hess;
      hess(0, 0) = (us.at(i + 1, j) - 2 * us.at(i, j) + us.at(i - 1, j)) / (h * h);
      hess(1, 1) = (us.at(i, j + 1) - 2 * us.at(i, j) + us.at(i, j - 1)) / (h * h);
      hess(0, 1) = hess(1, 0) =
          (us.at(i + 1, j + 1) - us.at(i + 1, j - 1) - us.at(i - 1, j + 1) + us.at(i - 1, j - 1)) / (4 * h * h);
      const SymMatrix<2> mm = dual_radii_matrix(i * h, j * h, hess);
      const Eigen<2> e = jacobi_eigen(mm);
      f.nodes.push_back(us.index(i, j));
      f.lambda.push_back(e.values[0]);
      f.lambda.push_back(e.values[1]);
      f.matrix.insert(f.matrix.end(), mm.a.begin(), mm.a.end());
      f.positive.push_back(e.values[1] > 0.0 ? 1 : 0);
    }
  return f;
}

struct ConditionAReport {
  bool spacelike = false;
  bool strictlyConvex = false;
  std::vector<double> asymptoticPhi;  ///< u - |x| over the outermost 5% of radii
  double asymptoticPhiMean = 0.0;
  double c0 = 0.0;    ///< inf of sigma_k^{alpha/k}
  double bigC = 0.0;  ///< sup of sigma_k^{alpha/k} / s
  double minSupport = 0.0;
  double declaredC = 1.0;
  bool holds = false;
  std::string failure;
};

/// Condition A on a radial initial graph sampled out to a large radius.
inline ConditionAReport condition_a_check(const RadialField& u0, const SpeedParams& p, double declaredC) {
  p.validate();
  ConditionAReport rep;
  rep.declaredC = declaredC;
  const int nn = u0.intervals();
  rep.spacelike = true;
  for (int i = 0; i <= nn; ++i) {
    const Deriv d = derivatives_1d(u0.values, i, u0.h, true);
    if (!(d.d1 * d.d1 <= 1.0 - kSpacelikeGuard)) rep.spacelike = false;
  }
  const int first = std::min(nn - 1, static_cast<int>(std::floor(0.95 * nn)));
  double sum = 0.0;
  for (int i = first; i <= nn; ++i) {
    rep.asymptoticPhi.push_back(u0.values[i] - u0.radius_at(i));
    sum += rep.asymptoticPhi.back();
  }
  rep.asymptoticPhiMean = sum / static_cast<double>(rep.asymptoticPhi.size());
  if (!rep.spacelike) {
    rep.failure = "not spacelike";
    return rep;
  }
  const auto curv = primal_curvature(u0, p);
  rep.strictlyConvex = true;
  rep.c0 = std::numeric_limits<double>::infinity();
  rep.bigC = 0.0;
  rep.minSupport = std::numeric_limits<double>::infinity();
  bool coneOk = true;
  for (const CurvatureData& c : curv) {
    if (!cone_check(p, c.kappa_span(), Cone::strict)) rep.strictlyConvex = false;
    rep.minSupport = std::min(rep.minSupport, c.support);
    if (!cone_check(p, c.kappa_span(), Cone::garding)) {
      coneOk = false;
      continue;
    }
    const double phi = speed_F_alpha(p, c.kappa_span());
    rep.c0 = std::min(rep.c0, phi);
    rep.bigC = std::max(rep.bigC, phi / c.support);
  }
  if (!coneOk) rep.c0 = 0.0;
  rep.holds = rep.spacelike && rep.strictlyConvex && rep.asymptoticPhiMean > 0.0 && rep.c0 > 0.0 &&
              rep.minSupport > 0.0 && rep.bigC < declaredC;
  if (!rep.strictlyConvex) rep.failure = "not strictly convex";
  else if (!(rep.asymptoticPhiMean > 0.0)) rep.failure = "asymptotic trace not positive";
  else if (!(rep.bigC < declaredC)) rep.failure = "pinching F^alpha < C s violated";
  return rep;
}

/// dualHeight = u*/w* and the hyperboloid height x_{n+1} = 1/w*.
template <class Field>
struct KleinScalars {
  Field dualHeight;
  Field xn1;
};

inline KleinScalars<RadialField> klein_scalars(const RadialField& us) {
  KleinScalars<RadialField> k{us, us};
  for (int i = 0; i <= us.intervals(); ++i) {
    const double s = us.radius_at(i);
    if (!(s < 1.0)) throw DomainError("klein_scalars: |xi| >= 1");
    const double ws = std::sqrt(1.0 - s * s);
    k.dualHeight.values[i] = us.values[i] / ws;
    k.xn1.values[i] = 1.0 / ws;
  }
  return k;
}

inline KleinScalars<BallField2D> klein_scalars(const BallField2D& us) {
  KleinScalars<BallField2D> k{us, us};
  for (int i = -us.m; i <= us.m; ++i)
    for (int j = -us.m; j <= us.m; ++j) {
      if (us.cell(i, j) == Cell::outside) continue;
      const double s2 = (i * us.h) * (i * us.h) + (j * us.h) * (j * us.h);
      if (!(s2 < 1.0)) throw DomainError("klein_scalars: |xi| >= 1");
      const double ws = std::sqrt(1.0 - s2);
      k.dualHeight.at(i, j) = us.at(i, j) / ws;
      k.xn1.at(i, j) = 1.0 / ws;
    }
  return k;
}

/// Pointwise scalar version.
inline double klein_height(double xi1, double xi2 = 0.0) {
  const double s2 = xi1 * xi1 + xi2 * xi2;
  if (!(s2 < 1.0)) throw DomainError("klein_height: |xi| >= 1");
  return 1.0 / std::sqrt(1.0 - s2);
}

}  // namespace sigmak
