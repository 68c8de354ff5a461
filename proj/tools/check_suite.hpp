#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "grand/config.hpp"
#include "grand/grand.hpp"

namespace grand::tools {

struct CheckLine {
  std::string name;
  bool passed;
  std::string detail;
};

inline FluidPoint random_interior(const PackingSet& ps, CounterRng& rng) {
  FluidPoint x(std::vector<double>(ps.size()));
  for (auto& v : x.x) v = 0.01 + uniform01(rng);
  return x;
}

/// Invariant suite for one configured instance.
inline std::vector<CheckLine> run_checks(const Config& cfg, std::uint64_t seed = 1) {
  std::vector<CheckLine> out;
  const auto add = [&](std::string name, const std::function<std::string()>& body) {
    try {
      auto detail = body();
      out.push_back({std::move(name), true, std::move(detail)});
    } catch (const std::exception& e) {
      out.push_back({std::move(name), false, e.what()});
    }
  };
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
  };
  const PackingSet& ps = cfg.packing;
  const auto rho = cfg.rho();
  CounterRng rng(seed);

  add("packing.closure_idempotent", [&] {
    const auto again = PackingSet::build_explicit(ps.num_types(), ps.configs());
    require(again == ps && again.added_by_closure().empty(), "closure changed a closed set");
    return "|K| = " + std::to_string(ps.size()) + ", kappa = " + std::to_string(ps.kappa());
  });
  add("packing.edges_consistent", [&] {
    for (const auto& e : ps.edges()) {
      const auto low = ps.config(e.config).minus(e.type);
      require(ps.index_of(low) == e.lower, "edge lower end mismatch");
    }
    return std::to_string(ps.edges().size()) + " edges";
  });

  const auto lp = solve_lp(ps, rho);
  add("fluid.lp_certificate", [&] {
    require(verify_optimal(ps, rho, lp.x_star, lp.eta), "optimality certificate failed");
    return "L* = " + fmt17(lp.L_star);
  });
  add("fluid.relaxation_matches", [&] {
    const double relaxed = solve_lp_relaxed(ps, rho);
    require(std::abs(relaxed - lp.L_star) <= 1e-10, "relaxed LP value differs");
    return fmt17(relaxed);
  });
  add("fluid.distance_zero_on_optimum", [&] {
    const double d = distance_to_optimal_set(ps, rho, lp, lp.x_star).distance;
    require(d <= 1e-7, "distance of x* is " + fmt17(d));
    return fmt17(d);
  });

  add("lyapunov.xi_nonpositive", [&] {
    const LyapunovParams lyp(ps, 0.1);
    for (int t = 0; t < 1000; ++t)
      require(xi_drift(ps, lyp, random_interior(ps, rng), cfg.mu) <= 0.0, "positive drift found");
    return std::string("1000 random points");
  });
  add("lyapunov.forms_agree", [&] {
    const LyapunovParams lyp(ps, 0.1);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto x = random_interior(ps, rng);
      const double p = xi_drift(ps, lyp, x, cfg.mu), g = xi_drift_gradient_form(ps, lyp, x, cfg.mu);
      worst = std::max(worst, std::abs(p - g) / std::max(1e-300, std::max(std::abs(p), std::abs(g))));
    }
    require(worst <= 1e-9, "relative disagreement " + fmt17(worst));
    return "max relative difference " + fmt17(worst);
  });
  add("lyapunov.cvx_product_form", [&] {
    std::string detail;
    double prev_dist = std::numeric_limits<double>::infinity();
    double prev_val = -std::numeric_limits<double>::infinity();
    for (double a : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const auto sol = solve_cvx(ps, rho, a);
      const LyapunovParams lyp(ps, a);
      const double xi = std::abs(xi_drift(ps, lyp, sol.point.x, cfg.mu));
      require(xi <= 1e-8, "drift at product-form point is " + fmt17(xi));
      const double d = distance_to_optimal_set(ps, rho, lp, sol.point.x).distance;
      const double v = lyapunov_value(lyp, sol.point.x);
      require(d < prev_dist, "distance to X* not decreasing in a");
      require(v > prev_val && v <= lp.L_star + 1e-9, "L(x*,a) not increasing towards L*");
      prev_dist = d;
      prev_val = v;
      detail += " a=" + fmt17(a) + ":d=" + fmt17(d);
    }
    return detail;
  });

  add("state.caches_consistent", [&] {
    auto spec = cfg.run_spec(100.0, cfg.policies.front(), seed);
    spec.start = StartMode::Empty;
    SystemState st(ps);
    CounterRng sim(seed);
    for (int t = 0; t < 20000; ++t) {
      step(st, spec, sim);
      require(st.caches_consistent(ps), "Y/Z cache drift");
    }
    return std::string("20000 events");
  });
  add("harness.poisson_tail_bound", [&] {
    require(poisson_tail_bound(100.0, 0.0) == 1.0, "w = 0 must give 1");
    require(std::abs(poisson_tail_bound(100.0, 20.0) - std::exp(-1.0)) < 1e-15, "nu = 100, w = 20");
    return std::string("ok");
  });
  return out;
}

inline bool print_checks(std::ostream& os, const std::vector<CheckLine>& lines) {
  bool all = true;
  for (const auto& l : lines) {
    os << (l.passed ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
    all = all && l.passed;
  }
  return all;
}

}  // namespace grand::tools
