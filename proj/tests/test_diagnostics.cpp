#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sigmakflow/diagnostics.hpp"

using namespace sigmak;

namespace {
const SpeedParams kP{2, 1, 1.0};

MonitorSeries series(std::vector<double> t, std::vector<double> v, Predicate p, double thr, double transient = 0.0) {
  MonitorSeries s;
  s.name = "s";
  s.times = std::move(t);
  s.values = std::move(v);
  s.predicate = p;
  s.threshold = thr;
  s.transient = transient;
  return s;
}

RadialField dual(double rho, double c, double r, double h) {
  return RadialField::sample(r, RadialField::intervals_for(r, h), [&](double s) { return -rho * std::sqrt(1 - s * s) - c; });
}

/// Primal radial run from sqrt(a^2 + x^2) + c with data A u0(R / A), snapshots at the given times.
std::vector<Snapshot<RadialField>> primal_run(const SpeedParams& p, double a, double c, double R, double h,
                                              const std::vector<double>& times) {
  auto u0 = [=](double x) { return c + std::sqrt(a * a + x * x); };
  const BoundaryProvider bp = [&](double t) {
    const double A = scale_factor(t, p.alpha);
    return A * u0(R / A);
  };
  auto st = make_state(RadialField::sample(R, RadialField::intervals_for(R, h), u0), Formulation::primalRadial, p);
  std::vector<Snapshot<RadialField>> out;
  for (double t : times) {
    run_until(st, t, {}, &bp);
    out.push_back({t, st.field});
  }
  return out;
}
}  // namespace

TEST(Verdict, Predicates) {
  EXPECT_TRUE(verdict(series({0, 1}, {0.5, 0.7}, Predicate::allAtLeast, 0.5)));
  EXPECT_FALSE(verdict(series({0, 1}, {0.5, 0.4}, Predicate::allAtLeast, 0.5)));
  EXPECT_TRUE(verdict(series({0, 1}, {0.5, 0.4}, Predicate::allAtMost, 0.5)));
  EXPECT_FALSE(verdict(series({0, 1}, {0.5, 0.6}, Predicate::allAtMost, 0.5)));
  EXPECT_TRUE(verdict(series({0, 1, 2}, {3, 2, 1e-4}, Predicate::decreasingTo, 1e-3)));
  EXPECT_FALSE(verdict(series({0, 1, 2}, {3, 2, 1e-2}, Predicate::decreasingTo, 1e-3)));
  EXPECT_FALSE(verdict(series({0, 1, 2, 3}, {3, 2, 2.5, 1e-4}, Predicate::decreasingTo, 1e-3)));
  // bump inside the transient is forgiven
  EXPECT_TRUE(verdict(series({0, 1, 2, 3, 4}, {1, 2, 1, 0.5, 1e-4}, Predicate::decreasingTo, 1e-3, 0.4)));
  EXPECT_TRUE(verdict(series({8, 16, 32}, {1.0, 0.25, 0.0625}, Predicate::orderAtLeast, 1.9)));
  EXPECT_FALSE(verdict(series({8, 16, 32}, {1.0, 0.25, 0.25}, Predicate::orderAtLeast, 0.8)));
  EXPECT_FALSE(verdict(series({}, {}, Predicate::allAtMost, 1.0)));
  EXPECT_FALSE(verdict(series({0, 1}, {0.0, std::nan("")}, Predicate::allAtMost, 1.0)));
  EXPECT_STREQ(to_string(Predicate::decreasingTo), "decreasingTo");
}

TEST(Verdict, FinalizeRequiresIncreasingTimes) {
  auto s = series({0, 1, 1}, {0, 0, 0}, Predicate::allAtMost, 1.0);
  EXPECT_THROW(finalize(s), DomainError);
  EXPECT_NEAR(observed_order(1.0, 0.25, 8, 16), 2.0, 1e-15);
}

TEST(Comparison, OrderedRunsPassAndSwappedFail) {
  const double h = 1.0 / 32;
  std::vector<Snapshot<RadialField>> lo, hi;
  for (double t : {0.0, 0.5, 1.0}) {
    lo.push_back({t, dual(2.0, 1.0 + t, 0.9, h)});
    hi.push_back({t, dual(1.5, 0.5, 0.9, h)});
  }
  EXPECT_TRUE(comparison_check(lo, hi, 1e-12).pass);
  EXPECT_FALSE(comparison_check(hi, lo, 1e-12).pass);
  hi[1].t = 0.6;
  EXPECT_THROW(comparison_check(lo, hi, 1e-12), DomainError);
}

TEST(Comparison, ScaledSandwich) {
  const double h = 1.0 / 32;
  ComparisonAccumulator<RadialField> acc("sandwich", 1e-12);
  const auto lower = dual(2.0, 1.0, 0.9, h), upper = dual(1.0, 0.0, 0.9, h);
  acc.add_scaled_sandwich(0.0, lower, dual(1.5, 0.5, 0.9, h), upper, 1.0);
  acc.add_scaled_sandwich(1.0, lower, dual(3.0, 1.0, 0.9, h), upper, 2.0);
  auto ok = acc.finish();
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.values.size(), 2u);
  ComparisonAccumulator<RadialField> bad("sandwich", 1e-12);
  bad.add_scaled_sandwich(0.0, lower, dual(0.5, 0.0, 0.9, h), upper, 1.0);
  EXPECT_FALSE(bad.finish().pass);
}

TEST(BoundaryExtremum, DualFlowRespectsBoundaryExtrema) {
  auto st = make_state(dual(2.0, 1.0, 0.9, 1.0 / 32), Formulation::dual, kP);
  BoundaryExtremumMonitor<RadialField> mon(st.initial, kP, 1e-6);
  mon.observe(st);
  run_until(st, 0.5, {}, [&](const FlowState<RadialField>&, const StepReport& r) { mon.observe_rates(r.clockBefore, r.rates); });
  const auto s = mon.finish();
  EXPECT_TRUE(s.pass) << s.values.back();
  EXPECT_GT(s.values.size(), 10u);
}

TEST(BoundaryExtremum, SpikedRatesFail) {
  const auto f = dual(2.0, 1.0, 0.9, 1.0 / 32);
  BoundaryExtremumMonitor<RadialField> mon(f, kP, 1e-6);
  std::vector<double> rates(f.values.size(), -1.0);
  mon.observe_rates(0.0, rates);
  rates[5] = -1e-3;  // F~ x = 1000 in the interior
  mon.observe_rates(0.1, rates);
  EXPECT_FALSE(mon.finish().pass);
  EXPECT_THROW(mon.observe_rates(0.2, std::vector<double>(3, -1.0)), DomainError);
}

TEST(BoundaryExtremum, SnapshotListVersion) {
  auto st = make_state(dual(2.0, 1.0, 0.9, 1.0 / 32), Formulation::dual, kP);
  std::vector<FlowState<RadialField>> run{st};
  for (double t : {0.1, 0.2}) {
    run_until(st, t);
    run.push_back(st);
  }
  EXPECT_TRUE(boundary_extremum_check(run).pass);
  auto norm = make_state(dual(2.0, 1.0, 0.9, 1.0 / 32), Formulation::normalized, kP);
  EXPECT_THROW(boundary_extremum_check(std::vector{norm}), DomainError);
}

TEST(PhiBounds, HoldAlongFlowWithAlphaTwo) {
  const SpeedParams p{2, 1, 2.0};
  const auto run = primal_run(p, hyperboloid_radius(p), 0.0, 6.0, 1.0 / 32, {0.0, 0.25, 0.5});
  const auto s = phi_bounds_check(run, p, 3.0);
  EXPECT_TRUE(s.pass) << s.notice;
  EXPECT_TRUE(s.notice.empty());
}

TEST(PhiBounds, AlphaOneSkipsLowerBound) {
  const auto run = primal_run(kP, std::sqrt(2.0), 0.0, 6.0, 1.0 / 32, {0.0, 0.25});
  const auto s = phi_bounds_check(run, kP, 3.0);
  EXPECT_TRUE(s.pass);
  EXPECT_NE(s.notice.find("alpha = 1"), std::string::npos);
}

TEST(PhiBounds, ViolationAndDegenerateK) {
  const SpeedParams p{2, 1, 2.0};
  auto run = primal_run(p, hyperboloid_radius(p), 0.0, 6.0, 1.0 / 32, {0.0});
  // a sharply curved later slice: Phi far above C2 V0
  run.push_back({0.1, RadialField::sample(6.0, 192, [](double x) { return std::sqrt(0.01 + x * x); })});
  EXPECT_FALSE(phi_bounds_check(run, p, 3.0).pass);
  const auto all = primal_run(p, hyperboloid_radius(p), 0.0, 6.0, 1.0 / 32, {0.0});
  const auto wide = phi_bounds_check(all, p, 100.0);
  EXPECT_FALSE(wide.pass);
  EXPECT_NE(wide.notice.find("outer boundary"), std::string::npos);
  EXPECT_THROW(phi_bounds_check(all, p, 0.5), DomainError);
}

TEST(KappaMax, Ceiling) {
  const auto run = primal_run(kP, std::sqrt(2.0), 0.0, 6.0, 1.0 / 32, {0.0, 0.5});
  EXPECT_TRUE(kappa_max_monitor(run, kP, 3.0, 1.0).pass);
  EXPECT_FALSE(kappa_max_monitor(run, kP, 3.0, 0.1).pass);
}

TEST(EvolutionIdentities, SecondOrderOnALadder) {
  std::vector<double> hs;
  std::vector<EvolutionResiduals> ladder;
  for (double h : {1.0 / 32, 1.0 / 64}) {
    const double d = 2 * h;
    const auto run = primal_run(kP, 1.0, 1.0, 4.0, h, {0.5 - d, 0.5, 0.5 + d});
    hs.push_back(h);
    ladder.push_back(evolution_identity_residuals(run[0], run[1], run[2], kP));
  }
  const auto out = evolution_identity_check(hs, ladder, 1.5);
  ASSERT_EQ(out.size(), 3u);
  for (const auto& s : out) EXPECT_TRUE(s.pass) << s.name << ' ' << s.values[0] << ' ' << s.values[1];
  std::vector<EvolutionResiduals> flat(2, ladder[0]);
  for (const auto& s : evolution_identity_check(hs, flat, 0.8)) EXPECT_FALSE(s.pass);
  EXPECT_THROW(evolution_identity_check({0.1}, {ladder[0]}), DomainError);
}

TEST(ScalingCovariance, JetAndGrid) {
  const auto jet = [](double r) {
    const double q = std::sqrt(1.5 + r * r);
    return RadialJet{0.3 + q, r / q, 1.5 / (q * q * q)};
  };
  for (SpeedParams p : {kP, SpeedParams{3, 2, 1.7}, SpeedParams{4, 1, 3.0}}) {
    const auto s = scaling_covariance_check(jet, 2.5, p, 5.0);
    EXPECT_TRUE(s.pass) << *std::max_element(s.values.begin(), s.values.end());
  }
  const auto u0 = RadialField::sample(4.0, 256, [](double r) { return 1.0 + std::sqrt(1 + r * r); });
  EXPECT_TRUE(scaling_covariance_check(u0, 0.7, kP).pass);
  EXPECT_THROW(scaling_covariance_check(u0, -1.0, kP), DomainError);
}

TEST(FlowOrbit, ScaledRunsAgree) {
  OrbitOptions o;
  o.h = 1.0 / 32;
  o.tolerance = 2e-2;
  const auto s = flow_orbit_check([](double x) { return 1.0 + std::sqrt(1.0 + x * x); }, kP, o);
  EXPECT_TRUE(s.pass) << s.values.back();
  o.tolerance = 1e-14;
  EXPECT_FALSE(flow_orbit_check([](double x) { return 1.0 + std::sqrt(1.0 + x * x); }, kP, o).pass);
}

TEST(Convergence, ReportAndControls) {
  const double h = 1.0 / 32;
  const auto target = dual(std::sqrt(2.0), 0.0, 0.9, h);
  std::vector<Snapshot<RadialField>> same{{0.0, target}, {1.0, target}};
  const auto z = convergence_report(same, target, 0.9, 1e-12);
  EXPECT_TRUE(z.pass);
  EXPECT_LT(z.values[1], 1e-15);
  std::vector<Snapshot<RadialField>> approach, leave;
  for (int q = 0; q < 5; ++q) {
    approach.push_back({double(q), dual(std::sqrt(2.0) + std::pow(0.1, q), 0.0, 0.9, h)});
    leave.push_back({double(q), dual(std::sqrt(2.0) + 0.1 * q, 0.0, 0.9, h)});
  }
  EXPECT_TRUE(convergence_report(approach, target, 0.9, 1e-3).pass);
  EXPECT_FALSE(convergence_report(leave, target, 0.9, 1e-3).pass);
  const auto small = dual(std::sqrt(2.0), 0.0, 0.5, h);
  EXPECT_THROW(convergence_report(approach, small, 0.9, 1e-3), DomainError);
}

TEST(Convergence, AgainstShootingProfile) {
  const auto sol = solve_radial_shooting(kP, 0.0);
  const auto tgt = dual(std::sqrt(2.0), 0.0, 0.9, 1.0 / 64);
  std::vector<Snapshot<RadialField>> run{{0.0, tgt}};
  const auto s = convergence_report(run, sol, 0.9, 0.9, 1e-5);
  EXPECT_TRUE(s.pass) << s.values[0];
}

TEST(Residuals, SignAndHistory) {
  EXPECT_TRUE(residual_sign_check({0, 1, 2}, {0.0, 1e-3, -1e-10}).pass);
  EXPECT_FALSE(residual_sign_check({0, 1, 2}, {0.0, 1e-3, -1e-4}).pass);
  const auto hist = residual_history_check({0, 1, 2, 3}, {1.0, 0.5, 0.1, 1e-9}, 1e-8);
  EXPECT_TRUE(hist.pass);
  EXPECT_NE(hist.notice.find("integral 1.6"), std::string::npos);
  EXPECT_FALSE(residual_history_check({0, 1, 2, 3}, {1.0, 0.5, 0.7, 1e-9}, 1e-8).pass);
}

TEST(DomainExhaustion, DistancesMustShrink) {
  const double h = 1.0 / 64;
  const auto ref = dual(std::sqrt(2.0), 0.0, 0.9, h);
  std::vector<std::pair<double, RadialField>> good{{0.6, dual(1.6, 0.0, 0.6, h)}, {0.75, dual(1.5, 0.0, 0.75, h)},
                                                   {0.9, dual(1.45, 0.0, 0.9, h)}};
  EXPECT_TRUE(domain_exhaustion_check(good, ref, 0.5).pass);
  std::swap(good[0].second, good[2].second);
  good[0].second = dual(1.45, 0.0, 0.6, h);
  good[2].second = dual(1.6, 0.0, 0.9, h);
  EXPECT_FALSE(domain_exhaustion_check(good, ref, 0.5).pass);
  EXPECT_NEAR(dual_distance(ref, dual(1.5, 0.0, 0.9, h), 0.0), 1.5 - std::sqrt(2.0), 1e-12);
  EXPECT_THROW(dual_distance(ref, dual(1.5, 0.0, 0.4, h), 0.5), DomainError);
}

TEST(ScalingCovariance, WrongCandidateFails) {
  auto jet = [](double r) {
    const double q = std::sqrt(1 + r * r);
    return RadialJet{q, r / q, 1 / (q * q * q)};
  };
  auto good = [&](double x) {
    const RadialJet j = jet(x / 2);
    return RadialJet{2 * j.u, j.up, j.upp / 2};
  };
  auto bent = [&](double x) {
    const RadialJet j = good(x);
    return RadialJet{j.u + 0.001 * x * x, j.up + 0.002 * x, j.upp + 0.002};
  };
  EXPECT_TRUE(scaling_covariance_check(jet, good, 2.0, kP, 4.0).pass);
  EXPECT_FALSE(scaling_covariance_check(jet, bent, 2.0, kP, 4.0).pass);
}
