#include <gtest/gtest.h>

#include <cmath>

#include "grand/fluid.hpp"
#include "grand/lyapunov.hpp"
#include "grand/random.hpp"
#include "oracles.hpp"

using namespace grand;

namespace {

PackingSet two_slot() { return PackingSet::build_explicit(1, {Configuration({2})}); }

struct Instance {
  PackingSet ps;
  std::vector<double> rho;
  std::vector<double> mu;
};

std::vector<Instance> instances() {
  return {
      {two_slot(), {1.0}, {1.0}},
      {PackingSet::build_vector_packing({{1.0}, {2.0}}, {3.0}), {0.5, 0.5}, {1.0, 0.5}},
      {PackingSet::build_explicit(2, {Configuration({1, 1})}), {0.4, 0.6}, {1.0, 2.0}},
      {PackingSet::build_vector_packing({{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}, {2.0, 2.0}), {0.3, 0.3, 0.4},
       {1.0, 2.0, 1.0}},
  };
}

FluidPoint random_point(std::size_t n, CounterRng& rng) {
  FluidPoint x{std::vector<double>(n)};
  for (auto& v : x.x) v = 0.01 + uniform01(rng);
  return x;
}

}  // namespace

TEST(Lyapunov, ValueExamples) {
  const auto ps = PackingSet::build_explicit(1, {Configuration({1})});
  const LyapunovParams lp(ps, 0.1);
  EXPECT_NEAR(lyapunov_value(lp, FluidPoint({1.0})), std::log(1.0 / (std::exp(1.0) * 0.1)) / std::log(10.0), 1e-12);
  EXPECT_NEAR(lyapunov_value(lp, FluidPoint({1.0})), 0.565706, 1e-6);
  EXPECT_DOUBLE_EQ(lyapunov_value(lp, FluidPoint({0.0})), 0.0);
  EXPECT_THROW(LyapunovParams(ps, 1.0), std::invalid_argument);
}

TEST(Lyapunov, ApproachesOccupancyAsAShrinks) {
  const auto ps = PackingSet::build_vector_packing({{1.0}, {2.0}}, {3.0});
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const LyapunovParams lp(ps, a);
    double worst = 0.0;
    for (double s : {0.1, 0.5, 1.0, 2.0}) {
      FluidPoint x(std::vector<double>(ps.size(), s));
      worst = std::max(worst, std::abs(lyapunov_value(lp, x) - x.sum()));
    }
    EXPECT_LT(worst, prev);
    prev = worst;
  }
}

TEST(Lyapunov, GradientSpecialPoints) {
  const auto ps = PackingSet::build_vector_packing({{1.0}, {2.0}}, {3.0});
  const LyapunovParams lp(ps, 0.05);
  FluidPoint flat(std::vector<double>(ps.size())), one(std::vector<double>(ps.size()));
  for (std::size_t j = 0; j < ps.size(); ++j) {
    flat[j] = lp.a / lp.c[j];
    one[j] = lp.a * std::exp(lp.b) / lp.c[j];
  }
  for (double g : lyapunov_grad(lp, flat)) EXPECT_NEAR(g, 0.0, 1e-14);
  for (double g : lyapunov_grad(lp, one)) EXPECT_NEAR(g, 1.0, 1e-14);
}

TEST(Lyapunov, GradientMatchesFiniteDifferences) {
  CounterRng rng(12);
  for (const auto& inst : instances()) {
    const LyapunovParams lp(inst.ps, 0.1);
    for (int t = 0; t < 10; ++t) {
      const auto x = random_point(inst.ps.size(), rng);
      const auto g = lyapunov_grad(lp, x);
      const auto f = [&](const std::vector<double>& v) { return lyapunov_value(lp, FluidPoint(v)); };
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double fd = oracle::central_difference(f, x.x, j, 1e-5 * x[j]);
        EXPECT_LE(std::abs(fd - g[j]), 1e-6 * std::max(1.0, std::abs(g[j])));
      }
    }
  }
}

TEST(Lyapunov, ChiProperties) {
  const auto ps = two_slot();
  const double a = 0.1;
  const LyapunovParams lp(ps, a);
  const double x1 = 0.3;
  const FluidPoint pf({x1, x1 * x1 / (2.0 * a)});
  EXPECT_NEAR(chi(ps, lp, pf, 0, 1), 0.0, 1e-14);

  CounterRng rng(13);
  const auto inst = instances()[3];
  const LyapunovParams lp3(inst.ps, 0.2);
  const auto x = random_point(inst.ps.size(), rng);
  const auto& edges = inst.ps.edges();
  for (std::size_t m = 0; m < edges.size(); ++m)
    for (std::size_t n = 0; n < edges.size(); ++n) {
      if (m == n || edges[m].type != edges[n].type) continue;
      EXPECT_NEAR(chi(inst.ps, lp3, x, m, n), -chi(inst.ps, lp3, x, n, m), 1e-12);
      auto doubled = x;
      doubled[edges[n].config] *= 2.0;
      if (edges[n].lower != edges[m].config && edges[m].lower != edges[n].config &&
          edges[m].config != edges[n].config) {
        EXPECT_NEAR(chi(inst.ps, lp3, doubled, m, n) - chi(inst.ps, lp3, x, m, n), std::log(2.0), 1e-12);
      }
    }
  EXPECT_THROW(chi(inst.ps, lp3, x, 0, [&] {
                 for (std::size_t n = 0; n < edges.size(); ++n)
                   if (edges[n].type != edges[0].type) return n;
                 return std::size_t{0};
               }()),
               std::invalid_argument);
}

TEST(Lyapunov, DriftNonpositiveAndFormsAgree) {
  CounterRng rng(14);
  for (const auto& inst : instances()) {
    const LyapunovParams lp(inst.ps, 0.1);
    for (int t = 0; t < 1000; ++t) {
      const auto x = random_point(inst.ps.size(), rng);
      const double pair = xi_drift(inst.ps, lp, x, inst.mu);
      const double grad = xi_drift_gradient_form(inst.ps, lp, x, inst.mu);
      EXPECT_LE(pair, 0.0);
      EXPECT_LE(std::abs(pair - grad), 1e-9 * std::max(std::abs(pair), std::abs(grad)) + 1e-300);
    }
  }
}

TEST(Lyapunov, TwoSlotClosedForm) {
  const auto ps = two_slot();
  const std::vector<double> rho{1.0};
  for (double a : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto sol = solve_cvx(ps, rho, a);
    const auto [x1, x2] = oracle::two_slot_cvx(a, 1.0);
    EXPECT_NEAR(sol.point.x[0], x1, 1e-10);
    EXPECT_NEAR(sol.point.x[1], x2, 1e-10);
    EXPECT_LE(sol.iterations, 30);
  }
  const auto sol = solve_cvx(ps, rho, 0.01);
  EXPECT_NEAR(sol.point.x[0], 0.0951249, 1e-7);
  EXPECT_NEAR(sol.point.x[1], 0.4524376, 1e-7);
}

TEST(Lyapunov, CvxPropertiesOnAllInstances) {
  CounterRng rng(15);
  for (const auto& inst : instances()) {
    const auto lp_sol = solve_lp(inst.ps, inst.rho);
    const auto vertices = oracle::lp_by_vertices(inst.ps, inst.rho).vertices;
    double prev_d = std::numeric_limits<double>::infinity();
    double prev_v = -std::numeric_limits<double>::infinity();
    for (double a : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const auto sol = solve_cvx(inst.ps, inst.rho, a);
      const LyapunovParams lp(inst.ps, a);
      EXPECT_LE(conservation_residual(inst.ps, inst.rho, sol.point.x), 1e-12);
      EXPECT_NEAR(xi_drift(inst.ps, lp, sol.point.x, inst.mu), 0.0, 1e-8);
      EXPECT_LE(max_abs_chi(inst.ps, lp, sol.point.x), 1e-9);
      const double d = distance_to_optimal_set(inst.ps, inst.rho, lp_sol, sol.point.x).distance;
      const double v = lyapunov_value(lp, sol.point.x);
      EXPECT_LT(d, prev_d);
      EXPECT_GT(v, prev_v);
      EXPECT_LE(v, lp_sol.L_star + 1e-12);
      prev_d = d;
      prev_v = v;

      // Minimality against random points of X: convex combinations of its vertices.
      const double lmin = lyapunov_value(lp, sol.point.x);
      for (int t = 0; t < 100; ++t) {
        FluidPoint y(std::vector<double>(inst.ps.size(), 0.0));
        double total = 0.0;
        std::vector<double> w(vertices.size());
        for (auto& v : w) total += (v = -std::log(1.0 - uniform01(rng)));
        for (std::size_t q = 0; q < vertices.size(); ++q)
          for (std::size_t j = 0; j < y.size(); ++j) y[j] += w[q] / total * vertices[q][j];
        EXPECT_GT(lyapunov_value(lp, y), lmin);
      }
    }
  }
}

TEST(Lyapunov, NearOptCertificate) {
  const auto inst = instances()[1];
  const auto sol = solve_cvx(inst.ps, inst.rho, 0.01);
  const LyapunovParams lp(inst.ps, 0.01);
  EXPECT_TRUE(near_opt_certificate(inst.ps, lp, sol.point.x, inst.rho, 1e-6, 0.25, 1e4));
  const auto lp_sol = solve_lp(inst.ps, inst.rho);
  EXPECT_FALSE(near_opt_certificate(inst.ps, lp, lp_sol.x_star, inst.rho, 1.0, 0.25, 1e4));
  const double delta1 = 0.01;
  auto bumped = sol.point.x;
  bumped[inst.ps.unit(0)] *= std::exp(2.0 * delta1);
  EXPECT_FALSE(near_opt_certificate(inst.ps, lp, bumped, inst.rho, delta1, 0.25, 1e12));
}

TEST(Lyapunov, ReportingFloor) {
  const auto r = floor_for_reporting(FluidPoint({0.0, 0.5}));
  EXPECT_TRUE(r.floored);
  EXPECT_EQ(r.x[0], 1e-300);
  EXPECT_FALSE(floor_for_reporting(FluidPoint({0.1, 0.5})).floored);
  EXPECT_THROW(xi_drift(two_slot(), LyapunovParams(two_slot(), 0.1), FluidPoint({0.0, 0.5}), std::vector<double>{1.0}),
               std::domain_error);
}
