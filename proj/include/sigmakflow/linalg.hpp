#pragma once
// Small dense symmetric matrices and a cyclic Jacobi eigensolver.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace sigmak {

template <int N>
struct SymMatrix {
  std::array<double, N * N> a{};

  double& operator()(int i, int j) { return a[i * N + j]; }
  double operator()(int i, int j) const { return a[i * N + j]; }

  static SymMatrix identity() {
    SymMatrix m;
    for (int i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }
};

template <int N>
SymMatrix<N> operator*(const SymMatrix<N>& x, const SymMatrix<N>& y) {
  SymMatrix<N> z;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (int l = 0; l < N; ++l) s += x(i, l) * y(l, j);
      z(i, j) = s;
    }
  return z;
}

/// B A B for symmetric A and B; the result is symmetrized exactly.
template <int N>
SymMatrix<N> sandwich(const SymMatrix<N>& b, const SymMatrix<N>& a) {
  SymMatrix<N> z = b * (a * b);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double m = 0.5 * (z(i, j) + z(j, i));
      z(i, j) = m;
      z(j, i) = m;
    }
  return z;
}

template <int N>
struct Eigen {
  std::array<double, N> values{};  ///< sorted descending
  SymMatrix<N> vectors;            ///< column j is the eigenvector of values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass is below
/// tol times the matrix norm (absolute tol for the zero matrix).
template <int N>
Eigen<N> jacobi_eigen(SymMatrix<N> m, double tol = 1e-13, int maxSweeps = 64) {
  Eigen<N> out;
  SymMatrix<N> v = SymMatrix<N>::identity();
  double norm = 0.0;
  for (double x : m.a) norm += x * x;
  norm = std::sqrt(norm);
  const double thresh = tol * (norm > 0.0 ? norm : 1.0);
  int sweep = 0;
  for (; sweep < maxSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < N; ++p)
      for (int q = p + 1; q < N; ++q) off += m(p, q) * m(p, q);
    if (std::sqrt(2.0 * off) <= thresh) break;
    for (int p = 0; p < N; ++p) {
      for (int q = p + 1; q < N; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < N; ++r) {
          const double mrp = m(r, p), mrq = m(r, q);
          m(r, p) = c * mrp - s * mrq;
          m(r, q) = s * mrp + c * mrq;
        }
        for (int r = 0; r < N; ++r) {
          const double mpr = m(p, r), mqr = m(q, r);
          m(p, r) = c * mpr - s * mqr;
          m(q, r) = s * mpr + c * mqr;
        }
        for (int r = 0; r < N; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  out.sweeps = sweep;
  std::array<int, N> order;
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return m(i, i) > m(j, j); });
  for (int j = 0; j < N; ++j) {
    out.values[j] = m(order[j], order[j]);
    for (int r = 0; r < N; ++r) out.vectors(r, j) = v(r, order[j]);
  }
  return out;
}

}  // namespace sigmak
