#pragma once
// Elementary symmetric polynomials of principal curvatures and the two
// curvature speeds used by the primal and dual flows:
//   F^alpha = sigma_k(kappa)^{alpha/k}
//   F_*     = (sigma_n(lambda) / sigma_{n-k}(lambda))^{1/k}
// F_* evaluated on principal radii lambda = 1/kappa equals sigma_k(kappa)^{-1/k}.

#include <array>
#include <cmath>
#include <span>
#include <string>

#include "sigmakflow/errors.hpp"

namespace sigmak {

/// Largest ambient graph dimension supported by the fixed-capacity kernels.
inline constexpr int kMaxDim = 8;

using CurvatureArray = std::array<double, kMaxDim>;

struct SpeedParams {
  int n = 2;
  int k = 1;
  double alpha = 1.0;

  void validate() const {
    if (n < 1 || n > kMaxDim) throw DomainError("n must lie in [1, " + std::to_string(kMaxDim) + "]");
    if (k < 1 || k > n) throw DomainError("k must satisfy 1 <= k <= n");
    if (!(alpha >= 1.0)) throw DomainError("alpha must be >= 1");
  }
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

/// sigma_k by the polynomial-coefficient recurrence e_j += x * e_{j-1}; sigma_0 = 1.
inline double sigma(int k, std::span<const double> kappa) {
  const int n = static_cast<int>(kappa.size());
  if (k < 0 || k > n) throw DomainError("sigma: order k outside [0, n]");
  if (k == 0) return 1.0;
  std::array<double, kMaxDim + 1> e{};
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    const int top = (i + 1 < k) ? i + 1 : k;
    for (int j = top; j >= 1; --j) e[j] += kappa[i] * e[j - 1];
  }
  return e[k];
}

/// d sigma_k / d kappa_i = sigma_{k-1}(kappa with entry i removed). Index is zero-based.
inline double sigma_partial(int k, std::span<const double> kappa, int i) {
  const int n = static_cast<int>(kappa.size());
  if (i < 0 || i >= n) throw DomainError("sigma_partial: index out of range");
  if (k < 1 || k > n) throw DomainError("sigma_partial: order k outside [1, n]");
  CurvatureArray rest{};
  int m = 0;
  for (int j = 0; j < n; ++j)
    if (j != i) rest[m++] = kappa[j];
  return sigma(k - 1, std::span<const double>(rest.data(), m));
}

inline double speed_F_alpha(const SpeedParams& p, std::span<const double> kappa) {
  const double s = sigma(p.k, kappa);
  if (!(s > 0.0)) throw ConeError("speed_F_alpha: sigma_k <= 0");
  return std::pow(s, p.alpha / p.k);
}

inline double speed_F_star(const SpeedParams& p, std::span<const double> lambda) {
  const int n = static_cast<int>(lambda.size());
  for (int i = 0; i < n; ++i)
    if (!(lambda[i] > 0.0)) throw ConeError("speed_F_star: non-positive principal radius");
  const double num = sigma(n, lambda);
  const double den = sigma(n - p.k, lambda);
  return std::pow(num / den, 1.0 / p.k);
}

/// Gradient of Phi = sigma_k^{alpha/k} with respect to kappa.
inline void speed_F_alpha_gradient(const SpeedParams& p, std::span<const double> kappa,
                                   std::span<double> out) {
  const int n = static_cast<int>(kappa.size());
  const double s = sigma(p.k, kappa);
  if (!(s > 0.0)) throw ConeError("speed_F_alpha_gradient: sigma_k <= 0");
  const double outer = (p.alpha / p.k) * std::pow(s, p.alpha / p.k - 1.0);
  for (int i = 0; i < n; ++i) out[i] = outer * sigma_partial(p.k, kappa, i);
}

/// Gradient of F_* with respect to the principal radii:
/// dF_*/dlambda_i = (F_*/k) (1/lambda_i - sigma_{n-k-1}(lambda|i) / sigma_{n-k}(lambda)).
inline void speed_F_star_gradient(const SpeedParams& p, std::span<const double> lambda,
                                  std::span<double> out) {
  const int n = static_cast<int>(lambda.size());
  const double f = speed_F_star(p, lambda);
  const int m = n - p.k;
  const double den = sigma(m, lambda);
  for (int i = 0; i < n; ++i) {
    const double tail = (m >= 1) ? sigma_partial(m, lambda, i) / den : 0.0;
    out[i] = (f / p.k) * (1.0 / lambda[i] - tail);
  }
}

/// sigma_j of the vector (xr, xa, ..., xa) with n - 1 copies of xa:
/// C(n-1, j) xa^j + xr C(n-1, j-1) xa^{j-1}. `m` copies of xa in general.
inline double sigma_rotational(int j, int m, double xr, double xa) {
  if (j < 0 || j > m + 1) return 0.0;
  if (j == 0) return 1.0;
  double p = 1.0;
  for (int i = 0; i < j - 1; ++i) p *= xa;
  return binomial(m, j) * p * xa + xr * binomial(m, j - 1) * p;
}

/// sigma_j of (xa, ..., xa) with m copies.
inline double sigma_repeated(int j, int m, double xa) {
  if (j < 0 || j > m) return 0.0;
  double p = 1.0;
  for (int i = 0; i < j; ++i) p *= xa;
  return binomial(m, j) * p;
}

struct RotationalSpeed {
  double value = 0.0;
  double dRad = 0.0;  ///< derivative in the distinguished entry
  double dAng = 0.0;  ///< derivative in one of the repeated entries
};

/// F^alpha and its gradient for kappa = (kr, ka, ..., ka); kr, ka > 0 assumed.
inline RotationalSpeed rotational_F_alpha(const SpeedParams& p, double kr, double ka) {
  const int m = p.n - 1;
  const double sk = sigma_rotational(p.k, m, kr, ka);
  if (!(sk > 0.0)) throw ConeError("rotational_F_alpha: sigma_k <= 0");
  const double e = p.alpha / p.k;
  const double pw = (e == 1.0) ? 1.0 : std::pow(sk, e - 1.0);
  RotationalSpeed r;
  r.value = pw * sk;
  r.dRad = e * pw * sigma_repeated(p.k - 1, m, ka);
  r.dAng = (m >= 1) ? e * pw * sigma_rotational(p.k - 1, m - 1, kr, ka) : 0.0;
  return r;
}

/// F_* and its gradient for lambda = (lr, la, ..., la); lr, la > 0 assumed.
inline RotationalSpeed rotational_F_star(const SpeedParams& p, double lr, double la) {
  const int m = p.n - 1, q = p.n - p.k;
  const double num = sigma_rotational(p.n, m, lr, la);
  const double den = sigma_rotational(q, m, lr, la);
  const double ratio = num / den;
  RotationalSpeed r;
  r.value = (p.k == 1) ? ratio : std::pow(ratio, 1.0 / p.k);
  const double tailR = (q >= 1) ? sigma_repeated(q - 1, m, la) / den : 0.0;
  const double tailA = (q >= 1 && m >= 1) ? sigma_rotational(q - 1, m - 1, lr, la) / den : 0.0;
  r.dRad = (r.value / p.k) * (1.0 / lr - tailR);
  r.dAng = (m >= 1) ? (r.value / p.k) * (1.0 / la - tailA) : 0.0;
  return r;
}

enum class Cone {
  garding,  ///< sigma_j > 0 for 1 <= j <= k
  strict,   ///< Garding cone and every kappa_i > 0
};

inline bool cone_check(const SpeedParams& p, std::span<const double> kappa, Cone kind = Cone::garding) {
  if (p.k > static_cast<int>(kappa.size())) return false;
  for (int j = 1; j <= p.k; ++j)
    if (!(sigma(j, kappa) > 0.0)) return false;
  if (kind == Cone::strict)
    for (double x : kappa)
      if (!(x > 0.0)) return false;
  return true;
}

}  // namespace sigmak
