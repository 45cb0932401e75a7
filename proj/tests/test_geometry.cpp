#include <gtest/gtest.h>

#include <cmath>

#include "sigmakflow/geometry.hpp"
#include "sigmakflow/linalg.hpp"

using namespace sigmak;

TEST(RadialClosedForm, Hyperboloid) {
  const double a = 1.7;
  for (double r : {0.0, 0.3, 2.0, 9.0}) {
    const double U = std::sqrt(a * a + r * r);
    const auto c = radial_curvature_closed_form(U, r / U, a * a / (U * U * U), r, 3);
    EXPECT_NEAR(c.kappaRad, 1 / a, 1e-13);
    EXPECT_NEAR(c.kappaAng, 1 / a, 1e-13);
    EXPECT_NEAR(c.support, a, 1e-13);
  }
}

TEST(RadialClosedForm, PoleAndCone) {
  const auto pole = radial_curvature_closed_form(2.0, 0.0, 0.4, 0.0, 2);
  EXPECT_DOUBLE_EQ(pole.kappaRad, 0.4);
  EXPECT_DOUBLE_EQ(pole.kappaAng, 0.4);
  const auto cone = radial_curvature_closed_form(1.6, 0.6, 0.0, 1.0, 2);
  EXPECT_NEAR(cone.w, 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(cone.kappaRad, 0.0);
  EXPECT_NEAR(cone.kappaAng, 0.75, 1e-15);
  EXPECT_NEAR(cone.support, 1.25, 1e-15);
  EXPECT_THROW(radial_curvature_closed_form(1.0, 1.0, 0.0, 1.0, 2), SpacelikeError);
}

TEST(PrimalCurvature, RadialHyperboloidSecondOrder) {
  const SpeedParams p{2, 1, 1.0};
  double err[2];
  for (int l = 0; l < 2; ++l) {
    const auto u = RadialField::sample(4.0, 64 << l, [](double r) { return std::sqrt(2 + r * r); });
    const auto cd = primal_curvature(u, p);
    err[l] = 0.0;
    for (const auto& c : cd) {
      err[l] = std::max(err[l], std::abs(c.kappa[0] - 1 / std::sqrt(2.0)));
      err[l] = std::max(err[l], std::abs(c.kappa[1] - 1 / std::sqrt(2.0)));
      err[l] = std::max(err[l], std::abs(c.support - std::sqrt(2.0)));
    }
  }
  EXPECT_LT(err[1], 2e-3);
  EXPECT_GT(err[0] / err[1], 3.0);
}

TEST(PrimalCurvature, FlatAndShifted) {
  const SpeedParams p{2, 1, 1.0};
  const auto flat = primal_curvature(RadialField::sample(1.0, 10, [](double) { return 0.7; }), p);
  for (const auto& c : flat) {
    EXPECT_NEAR(c.kappa[0], 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(c.w, 1.0);
    EXPECT_NEAR(c.support, 0.7, 1e-14);
  }
  const auto sh = primal_curvature(RadialField::sample(2.0, 256, [](double r) { return 1 + std::sqrt(4 + r * r); }), p);
  EXPECT_NEAR(speed_F_alpha(p, sh[0].kappa_span()), 1.0, 1e-5);
  EXPECT_NEAR(sh[0].support, 3.0, 1e-12);
}

TEST(PrimalCurvature, SpacelikeGuardCarriesPoint) {
  const SpeedParams p{2, 1, 1.0};
  const auto u = RadialField::sample(2.0, 20, [](double r) { return r < 1 ? 0.5 * r * r : r - 0.5 + 0.5 * (r - 1) * (r - 1); });
  try {
    primal_curvature(u, p);
    FAIL() << "expected SpacelikeError";
  } catch (const SpacelikeError& e) {
    EXPECT_GT(e.index(), 0);
    EXPECT_GE(e.grad_squared(), 1.0 - kSpacelikeGuard);
  }
}

TEST(PrimalCurvature, GridHyperboloid) {
  const SpeedParams p{2, 2, 1.0};
  const auto u = GridField2D::sample(1.0, 1.0 / 64, [](double x, double y) { return std::sqrt(2 + x * x + y * y); });
  const auto cd = primal_curvature(u, p);
  double err = 0.0;
  for (const auto& c : cd)
    for (int i = 0; i < 2; ++i) err = std::max(err, std::abs(c.kappa[i] - 1 / std::sqrt(2.0)));
  EXPECT_LT(err, 5e-3);
}

TEST(DualCurvature, HyperboloidRadii) {
  const SpeedParams p{2, 1, 1.0};
  const double a = 1.3;
  for (double c : {0.0, 2.5}) {
    const auto us = RadialField::sample(0.9, 256, [&](double s) { return -a * std::sqrt(1 - s * s) - c; });
    const auto f = dual_curvature_matrix(us, p);
    double err = 0.0;
    for (size_t r = 0; r < f.size(); ++r)
      for (double l : f.radii(r)) err = std::max(err, std::abs(l - a));
    EXPECT_LT(err, 5e-3);
    EXPECT_TRUE(f.all_positive());
  }
  const auto ball = BallField2D::sample(0.8, 1.0 / 64, [&](double x, double y) { return -a * std::sqrt(1 - x * x - y * y); });
  const auto fb = dual_curvature_matrix(ball, p);
  double err = 0.0;
  for (size_t r = 0; r < fb.size(); ++r)
    for (double l : fb.radii(r)) err = std::max(err, std::abs(l - a));
  EXPECT_LT(err, 5e-3);
}

TEST(DualCurvature, CentreIsHessian) {
  SymMatrix<2> hess;
  hess(0, 0) = 2.0;
  hess(1, 1) = 3.0;
  hess(0, 1) = hess(1, 0) = 0.5;
  const auto m = dual_radii_matrix(0.0, 0.0, hess);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(m(i, j), hess(i, j));
}

TEST(DualCurvature, FlagsNonConvexPoints) {
  const SpeedParams p{2, 1, 1.0};
  const auto us = RadialField::sample(0.5, 50, [](double s) { return -s * s; });
  EXPECT_FALSE(dual_curvature_matrix(us, p).all_positive());
}

TEST(ConditionA, Examples) {
  const SpeedParams p{2, 1, 1.0};
  const auto good = condition_a_check(RadialField::sample(200.0, 4000, [](double r) { return 1 + std::sqrt(4 + r * r); }), p, 1.0);
  EXPECT_TRUE(good.holds) << good.failure;
  EXPECT_NEAR(good.c0, 1.0, 1e-3);
  EXPECT_NEAR(good.bigC, 1.0 / 3.0, 1e-3);
  const auto bad = condition_a_check(RadialField::sample(200.0, 4000, [](double r) { return std::sqrt(1 + r * r); }), p, 1.0);
  EXPECT_FALSE(bad.holds);
  const auto cone = condition_a_check(RadialField::sample(50.0, 500, [](double r) { return 0.99 * r; }), p, 1.0);
  EXPECT_FALSE(cone.strictlyConvex);
  EXPECT_FALSE(cone.holds);
}

TEST(Klein, Scalars) {
  const auto us = RadialField::sample(0.8, 8, [](double s) { return -1.5 * std::sqrt(1 - s * s); });
  const auto k = klein_scalars(us);
  for (double v : k.dualHeight.values) EXPECT_NEAR(v, -1.5, 1e-14);
  EXPECT_DOUBLE_EQ(k.xn1.values[0], 1.0);
  EXPECT_NEAR(k.xn1.values.back(), 1 / 0.6, 1e-14);
  EXPECT_NEAR(klein_height(0.8), 1 / 0.6, 1e-14);
  EXPECT_THROW(klein_height(0.6, 0.8), DomainError);
}

TEST(Jacobi, ReconstructsMatrix) {
  SymMatrix<3> m;
  const double v[3][3] = {{4, 1, -2}, {1, 2, 0.5}, {-2, 0.5, 3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[i][j];
  const auto e = jacobi_eigen(m);
  EXPECT_GE(e.values[0], e.values[1]);
  EXPECT_GE(e.values[1], e.values[2]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int l = 0; l < 3; ++l) s += e.vectors(i, l) * e.values[l] * e.vectors(j, l);
      EXPECT_NEAR(s, v[i][j], 1e-12);
    }
  EXPECT_NEAR(e.values[0] + e.values[1] + e.values[2], 9.0, 1e-12);
}
