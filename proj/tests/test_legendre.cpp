#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sigmakflow/legendre.hpp"

using namespace sigmak;

namespace {
const double kA = std::sqrt(2.0);
RadialField hyperboloid(double a, double R, int n, double shift = 0.0) {
  return RadialField::sample(R, n, [&](double r) { return shift + std::sqrt(a * a + r * r); });
}
}  // namespace

TEST(LegendreRadial, HyperboloidClosedForm) {
  const auto u = hyperboloid(kA, 10.0, 1280);
  const auto us = legendre_transform(u, 0.9, 90);
  EXPECT_NEAR(us.values[0], -1.4142136, 1e-6);
  double err = 0.0;
  for (int j = 0; j <= us.intervals(); ++j) {
    const double s = us.radius_at(j);
    err = std::max(err, std::abs(us.values[j] + kA * std::sqrt(1 - s * s)));
  }
  EXPECT_LT(err, 1e-4);
}

TEST(LegendreRadial, ConstantShift) {
  const auto u = hyperboloid(1.3, 8.0, 800);
  const auto v = hyperboloid(1.3, 8.0, 800, 0.75);
  const auto a = legendre_transform(u, 0.8, 80), b = legendre_transform(v, 0.8, 80);
  for (int j = 0; j <= 80; ++j) EXPECT_NEAR(b.values[j], a.values[j] - 0.75, 1e-12);
}

TEST(LegendreRadial, ValueAtOriginIsMinusMin) {
  // 1 + r^2/4 near the origin, continued linearly with slope 0.5 beyond r = 1
  const auto u = RadialField::sample(3.0, 300, [](double r) { return r < 1 ? 1 + r * r / 4 : 1.25 + 0.5 * (r - 1) + 0.05 * (r - 1) * (r - 1); });
  const auto us = legendre_transform(u, 0.4, 40);
  EXPECT_NEAR(us.values[0], -1.0, 1e-12);
}

TEST(LegendreRadial, RejectsNonConvexAndDegenerate) {
  const auto bad = RadialField::sample(2.0, 40, [](double r) { return std::cos(r); });
  EXPECT_THROW(legendre_transform(bad, 0.5, 10), ConvexityError);
  const auto flat = RadialField::sample(0.9, 40, [](double) { return -2.0; });
  EXPECT_THROW(legendre_inverse(flat, 1.0, 10), ConvexityError);
}

TEST(LegendreRadial, OutsideGradientImage) {
  const auto u = hyperboloid(kA, 2.0, 200);  // slope at R = 2 is 0.816
  EXPECT_THROW(legendre_transform(u, 0.9, 90), DomainError);
}

TEST(LegendreRadial, InverseOfDualHyperboloid) {
  const double h = 1.0 / 256;
  const auto us = RadialField::sample(0.95, RadialField::intervals_for(0.95, h), [](double s) { return -kA * std::sqrt(1 - s * s); });
  const auto u = legendre_inverse(us, 3.0, 300);
  double err = 0.0;
  for (int i = 0; i <= 300; ++i) err = std::max(err, std::abs(u.values[i] - std::sqrt(2 + u.radius_at(i) * u.radius_at(i))));
  EXPECT_LT(err, h);
}

TEST(LegendreRadial, InvolutionOnRandomConvexSpacelike) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> wd(0.05, 1.0), ad(0.5, 3.0);
  const double h = 1.0 / 64;
  for (int trial = 0; trial < 5; ++trial) {
    double w[3], a[3], sum = 0;
    for (int q = 0; q < 3; ++q) {
      w[q] = wd(rng);
      a[q] = ad(rng);
      sum += w[q];
    }
    for (double& x : w) x *= 0.99 / sum;  // total slope stays below 0.99
    auto f = [&](double r) {
      double v = 0;
      for (int q = 0; q < 3; ++q) v += w[q] * std::sqrt(a[q] * a[q] + r * r);
      return v;
    };
    const auto u = RadialField::sample(60.0, RadialField::intervals_for(60.0, h), f);
    const auto us = legendre_transform(u, 0.9, RadialField::intervals_for(0.9, h / 8));
    const double reach = 0.9 * gradient_image_radius(us);
    const auto back = legendre_inverse(us, reach, RadialField::intervals_for(reach, h));
    double err = 0;
    for (int i = 0; i <= back.intervals(); ++i) err = std::max(err, std::abs(back.values[i] - f(back.radius_at(i))));
    EXPECT_LE(err, 5 * h);
  }
}

TEST(LegendreRadial, ScalingCovarianceIsExactOnTheGrid) {
  const auto u = hyperboloid(1.1, 12.0, 1200);
  for (double A : {1.5, 2.0, 3.0}) {
    RadialField scaled = u;
    scaled.h = A * u.h;
    for (double& v : scaled.values) v *= A;
    const auto a = legendre_transform(u, 0.85, 85), b = legendre_transform(scaled, 0.85, 85);
    for (int j = 0; j <= 85; ++j) EXPECT_NEAR(b.values[j], A * a.values[j], 1e-10);
    // closed form: A sqrt(a^2 + (x/A)^2) = sqrt(a^2 A^2 + x^2) has dual -a A w*
    for (int j = 0; j <= 85; ++j) {
      const double s = b.radius_at(j);
      EXPECT_NEAR(b.values[j], -1.1 * A * std::sqrt(1 - s * s), 1e-3 * A);
    }
  }
}

TEST(LegendreRadial, PairMatchError) {
  const auto pair = make_legendre_pair(hyperboloid(kA, 10.0, 2000), 0.9, 900, 1e-4);
  EXPECT_LT(pair.matchError, 1e-4);
}

TEST(Legendre2D, HyperboloidAndInvolution) {
  const double h = 1.0 / 32;
  const auto u = GridField2D::sample(5.0, h, [](double x, double y) { return std::sqrt(2 + x * x + y * y); });
  const auto us = legendre_transform(u, 0.8, 1.0 / 64);
  double err = 0.0;
  for (int i = -us.m; i <= us.m; ++i)
    for (int j = -us.m; j <= us.m; ++j) {
      if (us.cell(i, j) == Cell::outside) continue;
      const double s2 = (i * us.h) * (i * us.h) + (j * us.h) * (j * us.h);
      err = std::max(err, std::abs(us.at(i, j) + kA * std::sqrt(1 - s2)));
    }
  EXPECT_LT(err, 2e-3);
  const auto back = legendre_inverse(us, 1.5, h);
  double inv = 0.0;
  for (int i = -back.m; i <= back.m; ++i)
    for (int j = -back.m; j <= back.m; ++j) {
      const double v = back.at(i, j);
      if (std::isnan(v)) continue;
      const double x = i * h, y = j * h;
      inv = std::max(inv, std::abs(v - std::sqrt(2 + x * x + y * y)));
    }
  EXPECT_LE(inv, 5 * h);
}

TEST(BoundaryTrace, ClosedForms) {
  const auto a = RadialField::sample(0.99, 990, [](double s) { return -1.7 * std::sqrt(1 - s * s) - 0.4; });
  const auto ta = boundary_trace(a, 1.0);
  EXPECT_NEAR(ta.phi[0], 0.4, 1e-6);
  EXPECT_FALSE(ta.unstable);
  const auto b = RadialField::sample(0.99, 990, [](double s) { return -kA * std::sqrt(1 - s * s); });
  EXPECT_NEAR(boundary_trace(b, 1.0).phi[0], 0.0, 1e-6);
  // u* = -(1 + 0.3 cos 2 theta) on the rim, scaled by A = 2
  const auto ball = BallField2D::sample(0.95, 1.0 / 128, [](double x, double y) {
    const double s2 = x * x + y * y;
    return -2.0 * (std::sqrt(1 - s2) + 1.0 + 0.3 * (x * x - y * y));
  });
  const auto tb = boundary_trace(ball, 2.0, 16, 5e-2);
  // s^2 = 1 - w*^2 is not linear in w*: the chord through the two sample radii misses by 0.3 w*_a w*_b
  const double h = 1.0 / 128, wa = std::sqrt(1 - std::pow(0.95 - h, 2)), wb = std::sqrt(1 - std::pow(0.95 - 2 * h, 2));
  for (size_t q = 0; q < tb.theta.size(); ++q) {
    const double c2 = std::cos(2 * tb.theta[q]);
    EXPECT_NEAR(tb.phi[q], 1.0 + 0.3 * c2 * (1 + wa * wb), 2e-3);
  }
}
