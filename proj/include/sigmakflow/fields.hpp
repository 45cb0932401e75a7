#pragma once
// Grid containers. RadialField samples f(rho) on rho_i = i*h, i = 0..N.
// GridField2D is a square Cartesian grid [-m h, m h]^2 (primal graphs).
// BallField2D is a Cartesian grid masked to the disk |xi| < r plus the ring of
// exterior nodes the 9-point stencil touches; the ring carries Dirichlet data.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "sigmakflow/errors.hpp"

namespace sigmak {

struct RadialField {
  double h = 0.0;
  std::vector<double> values;

  int intervals() const { return static_cast<int>(values.size()) - 1; }
  double outer_radius() const { return h * intervals(); }
  double radius_at(int i) const { return h * i; }

  /// Uniform grid on [0, outer] with `intervals` cells.
  template <class F>
  static RadialField sample(double outer, int intervals, F&& f) {
    if (intervals < 2 || !(outer > 0.0)) throw DomainError("RadialField: need outer > 0 and >= 2 intervals");
    RadialField out;
    out.h = outer / intervals;
    out.values.resize(intervals + 1);
    for (int i = 0; i <= intervals; ++i) out.values[i] = f(out.h * i);
    return out;
  }

  /// Number of intervals such that the spacing is as close as possible to h.
  static int intervals_for(double outer, double h) {
    const long n = std::lround(outer / h);
    return static_cast<int>(n < 2 ? 2 : n);
  }

  /// Cubic Lagrange interpolation on the four nearest nodes; even extension across rho = 0.
  double interpolate(double rho) const {
    const int n = intervals();
    if (rho < 0.0) rho = -rho;
    if (rho > outer_radius() * (1.0 + 1e-12)) throw DomainError("RadialField::interpolate: radius outside stored domain");
    const double x = rho / h;
    int i0 = static_cast<int>(std::floor(x)) - 1;
    if (i0 > n - 3) i0 = n - 3;
    auto at = [&](int i) { return values[i < 0 ? -i : i]; };
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) {
      double l = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) l *= (x - (i0 + b)) / static_cast<double>(a - b);
      sum += l * at(i0 + a);
    }
    return sum;
  }
};

struct GridField2D {
  double h = 0.0;
  int m = 0;  ///< nodes (i, j) with -m <= i, j <= m at x = (i h, j h)
  std::vector<double> values;

  int side() const { return 2 * m + 1; }
  long index(int i, int j) const { return static_cast<long>(i + m) * side() + (j + m); }
  double& at(int i, int j) { return values[index(i, j)]; }
  double at(int i, int j) const { return values[index(i, j)]; }

  template <class F>
  static GridField2D sample(double halfWidth, double h, F&& f) {
    if (!(h > 0.0) || !(halfWidth > 0.0)) throw DomainError("GridField2D: need h > 0 and halfWidth > 0");
    GridField2D g;
    g.h = h;
    g.m = static_cast<int>(std::lround(halfWidth / h));
    g.values.resize(static_cast<size_t>(g.side()) * g.side());
    for (int i = -g.m; i <= g.m; ++i)
      for (int j = -g.m; j <= g.m; ++j) g.at(i, j) = f(i * h, j * h);
    return g;
  }

  /// Bilinear interpolation; NaN outside the grid or next to NaN nodes.
  double interpolate(double x, double y) const {
    const double fx = x / h + m, fy = y / h + m;
    const double last = side() - 1;
    if (!(fx >= 0.0 && fy >= 0.0 && fx <= last && fy <= last)) return std::numeric_limits<double>::quiet_NaN();
    const int i = std::min(static_cast<int>(std::floor(fx)), side() - 2);
    const int j = std::min(static_cast<int>(std::floor(fy)), side() - 2);
    const double tx = fx - i, ty = fy - j;
    auto v = [&](int a, int b) { return values[static_cast<long>(a) * side() + b]; };
    return (1 - tx) * (1 - ty) * v(i, j) + tx * (1 - ty) * v(i + 1, j) + (1 - tx) * ty * v(i, j + 1) +
           tx * ty * v(i + 1, j + 1);
  }
};

enum class Cell : std::uint8_t { outside, interior, ring };

struct BallField2D {
  double r = 0.0;
  double h = 0.0;
  int m = 0;
  std::vector<double> values;  ///< NaN at outside nodes
  std::vector<Cell> cells;

  int side() const { return 2 * m + 1; }
  long index(int i, int j) const { return static_cast<long>(i + m) * side() + (j + m); }
  double& at(int i, int j) { return values[index(i, j)]; }
  double at(int i, int j) const { return values[index(i, j)]; }
  Cell cell(int i, int j) const { return cells[index(i, j)]; }
  int node_i(long idx) const { return static_cast<int>(idx / side()) - m; }
  int node_j(long idx) const { return static_cast<int>(idx % side()) - m; }

  /// Mask only; values are NaN. Requires the ring to stay inside the open unit ball.
  static BallField2D make(double r, double h) {
    if (!(r > 0.0) || !(h > 0.0)) throw DomainError("BallField2D: need r > 0 and h > 0");
    if (r + std::sqrt(2.0) * h >= 1.0) throw DomainError("BallField2D: ball plus stencil ring must lie inside B_1");
    BallField2D b;
    b.r = r;
    b.h = h;
    b.m = static_cast<int>(std::ceil(r / h)) + 1;
    const size_t total = static_cast<size_t>(b.side()) * b.side();
    b.values.assign(total, std::numeric_limits<double>::quiet_NaN());
    b.cells.assign(total, Cell::outside);
    for (int i = -b.m; i <= b.m; ++i)
      for (int j = -b.m; j <= b.m; ++j)
        if (std::hypot(i * h, j * h) < r) b.cells[b.index(i, j)] = Cell::interior;
    for (int i = -b.m; i <= b.m; ++i)
      for (int j = -b.m; j <= b.m; ++j) {
        if (b.cell(i, j) != Cell::outside) continue;
        bool touches = false;
        for (int di = -1; di <= 1 && !touches; ++di)
          for (int dj = -1; dj <= 1 && !touches; ++dj) {
            const int a = i + di, c = j + dj;
            if (a < -b.m || a > b.m || c < -b.m || c > b.m) continue;
            touches = b.cell(a, c) == Cell::interior;
          }
        if (touches) b.cells[b.index(i, j)] = Cell::ring;
      }
    return b;
  }

  /// Fills interior and ring nodes from f(xi1, xi2).
  template <class F>
  static BallField2D sample(double r, double h, F&& f) {
    BallField2D b = make(r, h);
    for (int i = -b.m; i <= b.m; ++i)
      for (int j = -b.m; j <= b.m; ++j)
        if (b.cell(i, j) != Cell::outside) b.at(i, j) = f(i * h, j * h);
    return b;
  }

  /// Bilinear interpolation over non-outside nodes; NaN when a corner is outside.
  double interpolate(double x, double y) const {
    const double fx = x / h + m, fy = y / h + m;
    const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
    if (i < 0 || j < 0 || i >= side() - 1 || j >= side() - 1) return std::numeric_limits<double>::quiet_NaN();
    const double tx = fx - i, ty = fy - j;
    auto v = [&](int a, int b) { return values[static_cast<long>(a) * side() + b]; };
    return (1 - tx) * (1 - ty) * v(i, j) + tx * (1 - ty) * v(i + 1, j) + (1 - tx) * ty * v(i, j + 1) +
           tx * ty * v(i + 1, j + 1);
  }
};

}  // namespace sigmak
