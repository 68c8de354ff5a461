#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "grand/packing.hpp"
#include "grand/simplex.hpp"
#include "grand/state.hpp"

namespace grand {

/// Optimal primal-dual pair of the fluid LP
///   min sum_k x_k  s.t.  sum_k k_i x_k = rho_i,  x >= 0.
struct LpSolution {
  double L_star = 0.0;
  FluidPoint x_star;
  std::vector<double> eta;
  std::vector<std::size_t> basis;  ///< optimal basis (indices into K)
  int iterations = 0;
};

namespace detail {

inline lp::Matrix conservation_matrix(const PackingSet& ps) {
  lp::Matrix a(ps.num_types(), ps.size());
  for (std::size_t j = 0; j < ps.size(); ++j)
    for (std::size_t i = 0; i < ps.num_types(); ++i) a(i, j) = ps.config(j)[i];
  return a;
}

inline void check_rho(const PackingSet& ps, std::span<const double> rho) {
  if (rho.size() != ps.num_types()) throw std::invalid_argument("rho needs one entry per type");
  for (double v : rho)
    if (!(v > 0.0)) throw std::invalid_argument("rho entries must be positive");
}

/// The unit configurations e_i form a feasible starting basis (x_{e_i} = rho_i).
inline std::vector<std::size_t> unit_basis(const PackingSet& ps) {
  std::vector<std::size_t> basis(ps.num_types());
  for (std::size_t i = 0; i < ps.num_types(); ++i) basis[i] = ps.unit(i);
  return basis;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace detail

/// Largest |sum_k k_i x_k - rho_i| over types.
inline double conservation_residual(const PackingSet& ps, std::span<const double> rho, const FluidPoint& x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.num_types(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < ps.size(); ++j) s += ps.config(j)[i] * x[j];
    worst = std::max(worst, std::abs(s - rho[i]));
  }
  return worst;
}

inline LpSolution solve_lp(const PackingSet& ps, std::span<const double> rho) {
  detail::check_rho(ps, rho);
  const lp::DenseSimplex simplex(detail::conservation_matrix(ps), std::vector<double>(rho.begin(), rho.end()),
                                 std::vector<double>(ps.size(), 1.0));
  const auto res = simplex.solve(detail::unit_basis(ps));

  LpSolution sol;
  sol.x_star = FluidPoint(res.x);
  sol.L_star = res.objective;
  sol.basis = res.basis;
  sol.iterations = res.iterations;
  // Optimal duals of the equality LP are nonnegative when rho > 0; clip
  // round-off.
  sol.eta = res.dual;
  for (auto& e : sol.eta) e = std::max(0.0, e);

  const double dual_value = detail::dot(rho, sol.eta);
  if (conservation_residual(ps, rho, sol.x_star) > 1e-10 || std::abs(dual_value - sol.L_star) > 1e-10)
    throw std::logic_error("simplex returned a point that is not an optimal primal-dual pair");
  return sol;
}

/// Optimal value of the relaxation with sum_k k_i x_k >= rho_i; equal to
/// L* for monotone packing sets.
inline double solve_lp_relaxed(const PackingSet& ps, std::span<const double> rho) {
  detail::check_rho(ps, rho);
  const std::size_t m = ps.num_types(), n = ps.size();
  lp::Matrix a(m, n + m);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) a(i, j) = ps.config(j)[i];
  for (std::size_t i = 0; i < m; ++i) a(i, n + i) = -1.0;
  std::vector<double> c(n + m, 0.0);
  std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
  const lp::DenseSimplex simplex(a, std::vector<double>(rho.begin(), rho.end()), c);
  return simplex.solve(detail::unit_basis(ps)).objective;
}

/// Optimality certificate: x in X, eta dual-feasible, and complementary
/// slackness (x_k = 0 wherever sum_i k_i eta_i < 1).
inline bool verify_optimal(const PackingSet& ps, std::span<const double> rho, const FluidPoint& x,
                           std::span<const double> eta) {
  constexpr double tol = 1e-9;
  if (x.size() != ps.size() || rho.size() != ps.num_types() || eta.size() != ps.num_types()) return false;
  for (double v : x.x)
    if (v < -tol) return false;
  if (conservation_residual(ps, rho, x) > tol) return false;
  for (double e : eta)
    if (e < -tol) return false;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    double load = 0.0;
    for (std::size_t i = 0; i < ps.num_types(); ++i) load += ps.config(j)[i] * eta[i];
    if (load > 1.0 + tol) return false;
    if (load < 1.0 - tol && x[j] > tol) return false;
  }
  return true;
}

/// Signed fluid-scale excess of occupied servers over the LP optimum.
inline double objective_gap(const FluidPoint& x, double L_star) { return x.sum() - L_star; }

struct DistanceResult {
  double distance = 0.0;
  FluidPoint nearest;
  double fw_gap = 0.0;
  int iterations = 0;
};

/// Euclidean distance from x to the optimal set X*, within additive `tol`.
///
/// X* is the face of X on which every column has zero reduced cost under an
/// optimal dual. Away-step Frank-Wolfe minimises 1/2 |x - y|^2 over that
/// face, with the simplex (warm-started from the optimal basis) as the
/// linear minimisation oracle. With f = 1/2 |x - y|^2 and Frank-Wolfe gap g,
/// d(y)^2 - d*^2 <= 2g, so d(y) - d* <= min(sqrt(2g), 2g / d(y)); iteration
/// stops once that bound is at most tol.
inline DistanceResult distance_to_optimal_set(const PackingSet& ps, std::span<const double> rho,
                                              const LpSolution& sol, const FluidPoint& x, double tol = 1e-7,
                                              int max_iterations = 200000) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (x.size() != ps.size()) throw std::invalid_argument("point has wrong dimension");
  const std::size_t n = ps.size();
  std::vector<bool> face(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    double load = 0.0;
    for (std::size_t i = 0; i < ps.num_types(); ++i) load += ps.config(j)[i] * sol.eta[i];
    face[j] = load >= 1.0 - 1e-9;
  }
  for (auto j : sol.basis)
    if (!face[j] && sol.x_star[j] > 1e-12) throw std::logic_error("optimal set is empty");

  const lp::Matrix a = detail::conservation_matrix(ps);
  const std::vector<double> b(rho.begin(), rho.end());
  const auto oracle = [&](const std::vector<double>& g) {
    const lp::DenseSimplex simplex(a, b, g);
    return simplex.solve(sol.basis, &face).x;
  };

  struct Atom {
    std::vector<double> v;
    double weight;
  };
  const auto same = [](const std::vector<double>& p, const std::vector<double>& q) {
    for (std::size_t j = 0; j < p.size(); ++j)
      if (std::abs(p[j] - q[j]) > 1e-12) return false;
    return true;
  };

  std::vector<double> neg_x(n);
  for (std::size_t j = 0; j < n; ++j) neg_x[j] = -x[j];
  std::vector<Atom> active{{oracle(neg_x), 1.0}};
  std::vector<double> y = active.front().v;
  std::vector<double> g(n), d(n);

  DistanceResult out;
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    for (std::size_t j = 0; j < n; ++j) g[j] = y[j] - x[j];
    const auto s = oracle(g);
    double fw_gap = 0.0;
    for (std::size_t j = 0; j < n; ++j) fw_gap += g[j] * (y[j] - s[j]);
    out.fw_gap = fw_gap;
    const double dy = std::sqrt(detail::dot(g, g));
    if (fw_gap <= tol * tol / 2.0 || 2.0 * fw_gap <= tol * dy) break;

    std::size_t away = 0;
    double away_score = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < active.size(); ++t) {
      const double score = detail::dot(g, active[t].v);
      if (score > away_score) {
        away_score = score;
        away = t;
      }
    }
    const double away_gap = away_score - detail::dot(g, y);

    const bool fw_step = fw_gap >= away_gap || active[away].weight >= 1.0 - 1e-15;
    double gamma_max = 1.0;
    if (fw_step) {
      for (std::size_t j = 0; j < n; ++j) d[j] = s[j] - y[j];
    } else {
      const double w = active[away].weight;
      gamma_max = w / (1.0 - w);
      for (std::size_t j = 0; j < n; ++j) d[j] = y[j] - active[away].v[j];
    }
    const double dd = detail::dot(d, d);
    if (dd <= 0.0) break;
    const double gamma = std::clamp(-detail::dot(g, d) / dd, 0.0, gamma_max);
    for (std::size_t j = 0; j < n; ++j) y[j] += gamma * d[j];

    if (fw_step) {
      if (gamma >= 1.0) {
        active = {{s, 1.0}};
        continue;
      }
      for (auto& atom : active) atom.weight *= (1.0 - gamma);
      auto it = std::find_if(active.begin(), active.end(), [&](const Atom& at) { return same(at.v, s); });
      if (it == active.end())
        active.push_back({s, gamma});
      else
        it->weight += gamma;
    } else {
      for (auto& atom : active) atom.weight *= (1.0 + gamma);
      active[away].weight -= gamma;
      if (gamma >= gamma_max) active.erase(active.begin() + static_cast<std::ptrdiff_t>(away));
    }
  }
  if (out.iterations == max_iterations) throw std::runtime_error("Frank-Wolfe did not reach the requested tolerance");
  double dist2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) dist2 += (x[j] - y[j]) * (x[j] - y[j]);
  out.distance = std::sqrt(dist2);
  out.nearest = FluidPoint(y);
  return out;
}

/// Convenience overload taking L* directly; re-solves the LP for the dual
/// certificate and rejects an L* that does not match.
inline double distance_to_optimal_set(const PackingSet& ps, std::span<const double> rho, double L_star,
                                      const FluidPoint& x, double tol = 1e-7) {
  const auto sol = solve_lp(ps, rho);
  if (std::abs(sol.L_star - L_star) > 1e-9)
    throw std::invalid_argument(L_star < sol.L_star ? "optimal set is empty: L* below the LP optimum"
                                                    : "L* does not match the LP optimum");
  return distance_to_optimal_set(ps, rho, sol, x, tol).distance;
}

}  // namespace grand
