#include <gtest/gtest.h>

#include <cmath>

#include "grand/engine.hpp"
#include "oracles.hpp"

using namespace grand;

namespace {

PackingSet two_slot() { return PackingSet::build_explicit(1, {Configuration({2})}); }

RunSpec base_spec(PackingSet ps, std::vector<double> lambda, double r, Policy pol, std::uint64_t seed) {
  std::vector<double> mu(lambda.size(), 1.0);
  return RunSpec(std::move(ps), std::move(lambda), std::move(mu), r, pol, seed);
}

}  // namespace

TEST(Engine, RunSpecNormalisesAndDefaults) {
  const RunSpec rs(two_slot(), {3.0}, {2.0}, 50.0, Policy(GrandAZ{0.1}));
  EXPECT_DOUBLE_EQ(rs.rho()[0], 1.0);
  EXPECT_DOUBLE_EQ(rs.warmup_time, 5.0);
  EXPECT_DOUBLE_EQ(rs.measure_time, 25.0);
  EXPECT_THROW(RunSpec(two_slot(), {1.0}, {0.0}, 50.0, Policy(GrandAZ{0.1})), std::invalid_argument);
  EXPECT_THROW(RunSpec(two_slot(), {1.0}, {1.0}, 0.5, Policy(GrandAZ{0.1})), std::invalid_argument);
  EXPECT_THROW(RunSpec(two_slot(), {1.0, 1.0}, {1.0}, 5.0, Policy(GrandAZ{0.1})), std::invalid_argument);
}

TEST(Engine, DepartureRate) {
  const auto spec = base_spec(two_slot(), {1.0}, 100.0, Policy(GrandAZ{0.1}), 0);
  const SystemState st(spec.packing, {0, 5});
  EXPECT_DOUBLE_EQ(departure_rate(spec, st, spec.packing.edges()[1]), 10.0);
  EXPECT_DOUBLE_EQ(total_rate(spec, st), 110.0);
}

TEST(Engine, EmptyStateOnlyArrivals) {
  const auto spec = base_spec(two_slot(), {1.0}, 100.0, Policy(GrandZp{0.9}), 0);
  const SystemState st(spec.packing);
  EXPECT_DOUBLE_EQ(total_rate(spec, st), 100.0);
  CounterRng rng(5);
  for (int t = 0; t < 1000; ++t) EXPECT_EQ(draw_event(st, spec, rng).event.kind, Event::Kind::Arrival);
}

TEST(Engine, FrozenRateFrequencies) {
  // Departures disabled, arrival rates fixed: each type occurs in
  // proportion to lambda_i and holding times average 1 / (r sum lambda).
  const auto ps = PackingSet::build_explicit(3, {Configuration({1, 1, 1})});
  auto spec = base_spec(ps, {1.0, 2.0, 5.0}, 10.0, Policy(GrandAZ{0.1}), 0);
  SystemState st(spec.packing);
  CounterRng rng(6);
  const int n = 100000;
  std::vector<double> counts(3, 0.0);
  double time = 0.0;
  for (int t = 0; t < n; ++t) {
    const auto res = draw_event(st, spec, rng, false);
    ASSERT_EQ(res.event.kind, Event::Kind::Arrival);
    counts[res.event.type] += 1.0;
    time += res.dt;
  }
  const double lambda_sum = spec.lambda[0] + spec.lambda[1] + spec.lambda[2];
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(oracle::within_sigmas(counts[i], n, spec.lambda[i] / lambda_sum)) << i;
  const double mean_dt = time / n;
  EXPECT_NEAR(mean_dt, 1.0 / (spec.r * lambda_sum), 3.0 * mean_dt / std::sqrt(n));
}

TEST(Engine, EventRatesProportional) {
  // One step from a fixed state: arrivals vs each departure edge.
  const auto spec = base_spec(two_slot(), {1.0}, 20.0, Policy(GrandAZ{0.1}), 0);
  const SystemState st(spec.packing, {4, 3});
  const double rate = total_rate(spec, st);  // 20 + 4 + 6
  CounterRng rng(7);
  const int n = 100000;
  double dep1 = 0, dep2 = 0;
  for (int t = 0; t < n; ++t) {
    const auto ev = draw_event(st, spec, rng).event;
    if (ev.kind == Event::Kind::Departure) (ev.edge == 0 ? dep1 : dep2) += 1.0;
  }
  EXPECT_TRUE(oracle::within_sigmas(dep1, n, 4.0 / rate));
  EXPECT_TRUE(oracle::within_sigmas(dep2, n, 6.0 / rate));
}

TEST(Engine, ConditionChecks) {
  const auto ps = two_slot();
  const std::vector<double> rho{1.0};
  const double r = 10000.0, eps = 0.25;
  // Y = r exactly.
  const SystemState exact(ps, {5000, 2500});
  EXPECT_TRUE(check_conditions(ps, exact, rho, r, eps, 1.0, 0.9).types_near_rho);
  EXPECT_TRUE(check_conditions(ps, exact, rho, r, eps, 1.0, 0.9).total_near_r);
  EXPECT_FALSE(check_conditions(ps, SystemState(ps), rho, r, eps, 1.0, 0.9).occupancy_floor);
  const double band = std::pow(r, -0.5 + eps);
  const auto far = static_cast<std::int64_t>(r * (1.0 + 2.0 * band));
  EXPECT_FALSE(check_conditions(ps, SystemState(ps, {far, 0}), rho, r, eps, 1.0, 0.9).total_near_r);
}

TEST(Engine, SExponent) {
  EXPECT_DOUBLE_EQ(s_exponent(Configuration({0, 0}), 0.93), 0.93);
  EXPECT_NEAR(s_exponent(Configuration({1, 1}), 0.96), 0.88, 1e-12);
  EXPECT_NEAR(s_exponent(Configuration({3}), 1.0 - 1e-12), 1.0, 1e-10);
}

TEST(Engine, InitialStateStationaryAndEmpty) {
  auto spec = base_spec(two_slot(), {1.0}, 1000.0, Policy(GrandZp{0.96}), 11);
  CounterRng rng(11);
  const auto st = initial_state(spec, rng);
  EXPECT_TRUE(st.caches_consistent(spec.packing));
  EXPECT_NEAR(static_cast<double>(st.z()), 1000.0, 4.0 * std::sqrt(1000.0));
  spec.start = StartMode::Empty;
  EXPECT_EQ(initial_state(spec, rng), SystemState(spec.packing));
}

TEST(Engine, NoPackingGivesMMInfinity) {
  const auto ps = PackingSet::build_explicit(1, {Configuration({1})});
  auto spec = base_spec(ps, {1.0}, 200.0, Policy(GrandAZ{0.1}), 21);
  spec.measure_time = 200.0;
  const auto rec = simulate(spec);
  const double se = rec.ci_x[0] / stats::t_quantile(spec.batches - 1.0);
  EXPECT_NEAR(rec.mean_x[0], 1.0, 3.0 * se);
}

TEST(Engine, YMarginalsAndDeterminism) {
  const auto ps = PackingSet::build_vector_packing({{1.0}, {2.0}}, {3.0});
  for (const Policy pol : {Policy(GrandZp{0.97}), Policy(GrandAZ{0.1})}) {
    const RunSpec spec(ps, {1.0, 0.5}, {1.0, 0.5}, 300.0, pol, 31);
    const auto a = simulate(spec);
    const auto b = simulate(spec);
    EXPECT_EQ(a, b);
    const auto rho = spec.rho();
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_NEAR(a.mean_y[i], rho[i] * spec.r, 4.0 * std::sqrt(rho[i] * spec.r)) << pol.name() << " type " << i;
    EXPECT_NEAR(a.end_time, spec.warmup_time + spec.measure_time, 1e-12);
    EXPECT_EQ(a.y_samples.size(), static_cast<std::size_t>(spec.tail_samples));
    // Conservation of the time averages.
    for (std::size_t i = 0; i < 2; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < ps.size(); ++j) s += ps.config(j)[i] * a.mean_x[j];
      EXPECT_NEAR(s * spec.r, a.mean_y[i], 1e-8 * spec.r);
    }
  }
}

TEST(Engine, DifferentSeedsDiffer) {
  const RunSpec a(two_slot(), {1.0}, {1.0}, 100.0, Policy(GrandAZ{0.1}), 1);
  RunSpec b = a;
  b.seed = 2;
  EXPECT_NE(simulate(a).mean_x, simulate(b).mean_x);
}

TEST(Engine, EmptyStartWindowExcludesWarmup) {
  RunSpec spec(two_slot(), {1.0}, {1.0}, 1000.0, Policy(GrandZp{0.96}), 41);
  spec.start = StartMode::Empty;
  const auto rec = simulate(spec);
  // The state starts empty, but after warm-up every configuration is populated.
  EXPECT_GT(rec.min_z, 0);
  for (auto m : rec.min_counts) EXPECT_GT(m, 0);
}

TEST(Engine, PolicyIndependenceOfY) {
  const auto ps = two_slot();
  const RunSpec a(ps, {1.0}, {1.0}, 500.0, Policy(GrandZp{0.96}), 51);
  const RunSpec b(ps, {1.0}, {1.0}, 500.0, Policy(GrandAZ{0.2}), 52);
  const auto ra = simulate(a), rb = simulate(b);
  EXPECT_NEAR(ra.mean_y[0], rb.mean_y[0], 2.0 * (ra.ci_y[0] + rb.ci_y[0]));
}
