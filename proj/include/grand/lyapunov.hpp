#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "grand/fluid.hpp"
#include "grand/packing.hpp"
#include "grand/simplex.hpp"
#include "grand/state.hpp"

namespace grand {

/// Parameters of the entropy-type Lyapunov function
///   L(x) = -(1/log a) sum_k x_k log(x_k c_k / (e a)),  c_k = prod_i k_i!.
struct LyapunovParams {
  double a;
  double b;               ///< -log a
  std::vector<double> c;  ///< c_k in canonical order

  LyapunovParams(const PackingSet& ps, double a_in) : a(a_in), b(-std::log(a_in)), c(ps.factorial_products()) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("Lyapunov parameter a must lie in (0, 1)");
  }
};

/// x over K in product form x_k = (a / c_k) exp(b sum_i k_i nu_i).
struct ProductFormPoint {
  FluidPoint x;
  std::vector<double> nu;
  double a = 0.0;
};

namespace detail {

/// Coordinate of the augmented point: x_0 = a for the empty configuration.
inline double augmented(const LyapunovParams& lp, const FluidPoint& x, std::size_t j) {
  return j == kEmptyServer ? lp.a : x[j];
}

inline void require_positive(const FluidPoint& x) {
  for (double v : x.x)
    if (!(v > 0.0)) throw std::domain_error("coordinate must be strictly positive");
}

/// x_(i) = x_0 + sum over k with k + e_i in K of x_k, with x_0 = a.
inline double available_mass(const PackingSet& ps, const LyapunovParams& lp, const FluidPoint& x, std::size_t i) {
  double s = lp.a;
  for (std::size_t j = 0; j < ps.size(); ++j)
    if (ps.up(j, i) != kInfeasible) s += x[j];
  return s;
}

}  // namespace detail

inline double lyapunov_value(const LyapunovParams& lp, const FluidPoint& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < 0.0) throw std::domain_error("Lyapunov function is defined on the nonnegative orthant");
    if (x[j] == 0.0) continue;
    s += x[j] * (std::log(x[j] * lp.c[j] / lp.a) - 1.0);
  }
  return s / lp.b;
}

/// Partial derivatives (1/b) log(c_k x_k / a). The empty configuration,
/// evaluated at x_0 = a, has derivative 0.
inline std::vector<double> lyapunov_grad(const LyapunovParams& lp, const FluidPoint& x) {
  detail::require_positive(x);
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = std::log(lp.c[j] * x[j] / lp.a) / lp.b;
  return g;
}

/// Partial derivative at index j, with the zero-configuration convention.
inline double lyapunov_partial(const LyapunovParams& lp, const FluidPoint& x, std::size_t j) {
  if (j == kEmptyServer) return 0.0;
  if (!(x[j] > 0.0)) throw std::domain_error("coordinate must be strictly positive");
  return std::log(lp.c[j] * x[j] / lp.a) / lp.b;
}

/// chi for edges (k, i) and (k', i):
///   log(k'_i x_{k-e_i} x_{k'}) - log(k_i x_k x_{k'-e_i})
inline double chi(const PackingSet& ps, const LyapunovParams& lp, const FluidPoint& x, std::size_t edge,
                  std::size_t other) {
  const Edge& e = ps.edges().at(edge);
  const Edge& f = ps.edges().at(other);
  if (e.type != f.type) throw std::invalid_argument("chi needs two edges of the same customer type");
  const std::size_t i = e.type;
  const double xk = detail::augmented(lp, x, e.config), xk_low = detail::augmented(lp, x, e.lower);
  const double xf = detail::augmented(lp, x, f.config), xf_low = detail::augmented(lp, x, f.lower);
  if (!(xk > 0.0 && xk_low > 0.0 && xf > 0.0 && xf_low > 0.0))
    throw std::domain_error("chi is undefined at a zero coordinate");
  const double ki = ps.config(e.config)[i], kpi = ps.config(f.config)[i];
  return (std::log(kpi) + std::log(xk_low) + std::log(xf)) - (std::log(ki) + std::log(xk) + std::log(xf_low));
}

/// Drift of L along the idealised flow, summed pairwise: for each type i
/// and each unordered pair of distinct type-i edges,
///   (mu_i / (b x_(i))) chi (k_i x_k x_{k'-e_i} - k'_i x_{k-e_i} x_{k'}),
/// each term nonpositive.
inline double xi_drift(const PackingSet& ps, const LyapunovParams& lp, const FluidPoint& x,
                       std::span<const double> mu) {
  detail::require_positive(x);
  const auto& edges = ps.edges();
  double total = 0.0;
  for (std::size_t i = 0; i < ps.num_types(); ++i) {
    const double scale = mu[i] / (lp.b * detail::available_mass(ps, lp, x, i));
    for (std::size_t m = 0; m < edges.size(); ++m) {
      if (edges[m].type != i) continue;
      const Edge& e = edges[m];
      const double forward_e = ps.config(e.config)[i] * x[e.config];
      const double low_e = detail::augmented(lp, x, e.lower);
      for (std::size_t n = m + 1; n < edges.size(); ++n) {
        if (edges[n].type != i) continue;
        const Edge& f = edges[n];
        const double u = forward_e * detail::augmented(lp, x, f.lower);          // k_i x_k x_{k'-e_i}
        const double v = ps.config(f.config)[i] * x[f.config] * low_e;           // k'_i x_{k-e_i} x_{k'}
        total += scale * (std::log(v) - std::log(u)) * (u - v);
      }
    }
  }
  return total;
}

/// The same drift written as the directional derivative of L along the
/// idealised flow: sum over edges of [dL/dx_k - dL/dx_{k-e_i}] (v_ki - w_ki)
/// with w_ki = k_i mu_i x_k and v_ki = lambda~_i x_{k-e_i} / x_(i).
inline double xi_drift_gradient_form(const PackingSet& ps, const LyapunovParams& lp, const FluidPoint& x,
                                     std::span<const double> mu) {
  detail::require_positive(x);
  std::vector<double> lambda_tilde(ps.num_types(), 0.0), mass(ps.num_types());
  for (std::size_t j = 0; j < ps.size(); ++j)
    for (std::size_t i = 0; i < ps.num_types(); ++i) lambda_tilde[i] += ps.config(j)[i] * mu[i] * x[j];
  for (std::size_t i = 0; i < ps.num_types(); ++i) mass[i] = detail::available_mass(ps, lp, x, i);
  // Per type the flows v - w sum to zero, so the derivative differences can
  // be centred on the creation edge; this avoids cancellation near the
  // product-form points where the drift vanishes to second order.
  std::vector<double> centre(ps.num_types());
  for (std::size_t i = 0; i < ps.num_types(); ++i) centre[i] = lyapunov_partial(lp, x, ps.unit(i));
  double total = 0.0;
  for (const auto& e : ps.edges()) {
    const double dl = lyapunov_partial(lp, x, e.config) - lyapunov_partial(lp, x, e.lower) - centre[e.type];
    const double w = ps.config(e.config)[e.type] * mu[e.type] * x[e.config];
    const double v = lambda_tilde[e.type] * detail::augmented(lp, x, e.lower) / mass[e.type];
    total += dl * (v - w);
  }
  return total;
}

/// Point with coordinates (a / c_k) exp(b sum_i k_i nu_i), evaluated in the
/// log domain.
inline FluidPoint product_form(const PackingSet& ps, const LyapunovParams& lp, std::span<const double> nu) {
  FluidPoint x(std::vector<double>(ps.size()));
  for (std::size_t j = 0; j < ps.size(); ++j) {
    double e = 0.0;
    for (std::size_t i = 0; i < ps.num_types(); ++i) e += ps.config(j)[i] * nu[i];
    x[j] = std::exp(std::log(lp.a) - std::log(lp.c[j]) + lp.b * e);
  }
  return x;
}

struct CvxResult {
  ProductFormPoint point;
  int iterations = 0;
  double residual = 0.0;          ///< max_i |sum_k k_i x_k - rho_i|
  double multiplier_error = 0.0;  ///< max_i |nu_i - (1 - log x_{e_i} / log a)|
};

/// Minimiser of L over X. Damped Newton on the convex dual potential
///   Phi(nu) = (1/b) sum_k x_k(nu) - rho . nu,
/// whose gradient is the conservation residual and whose Hessian is
/// b sum_k k k' x_k(nu). Starts at nu = 0 and backtracks by halving.
inline CvxResult solve_cvx(const PackingSet& ps, std::span<const double> rho, double a, double tol = 1e-12,
                           int max_iterations = 200) {
  detail::check_rho(ps, rho);
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const LyapunovParams lp(ps, a);
  const std::size_t m = ps.num_types();
  std::vector<double> nu(m, 0.0);

  const auto potential = [&](const std::vector<double>& v) {
    const auto x = product_form(ps, lp, v);
    double phi = x.sum() / lp.b;
    for (std::size_t i = 0; i < m; ++i) phi -= rho[i] * v[i];
    return phi;
  };
  const auto gradient = [&](const FluidPoint& x) {
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = -rho[i];
    for (std::size_t j = 0; j < ps.size(); ++j)
      for (std::size_t i = 0; i < m; ++i) g[i] += ps.config(j)[i] * x[j];
    return g;
  };

  CvxResult out;
  for (out.iterations = 0;; ++out.iterations) {
    const auto x = product_form(ps, lp, nu);
    const auto g = gradient(x);
    double worst = 0.0;
    for (double v : g) worst = std::max(worst, std::abs(v));
    if (worst <= tol) {
      out.point = ProductFormPoint{x, nu, a};
      out.residual = worst;
      break;
    }
    if (out.iterations >= max_iterations) throw std::runtime_error("Newton iteration did not converge");

    std::vector<std::vector<double>> h(m, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < ps.size(); ++j)
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = 0; q < m; ++q) h[p][q] += lp.b * ps.config(j)[p] * ps.config(j)[q] * x[j];
    std::vector<double> neg_g(m);
    for (std::size_t i = 0; i < m; ++i) neg_g[i] = -g[i];
    const auto dir = lp::solve_square(h, neg_g);

    double slope = 0.0;
    for (std::size_t i = 0; i < m; ++i) slope += g[i] * dir[i];
    const double phi0 = potential(nu);
    double t = 1.0;
    std::vector<double> trial(m);
    // Armijo on Phi, or a smaller residual: close to the optimum the decrease
    // of Phi drops below its rounding error while the residual still shrinks.
    for (int halving = 0; halving < 200; ++halving, t *= 0.5) {
      for (std::size_t i = 0; i < m; ++i) trial[i] = nu[i] + t * dir[i];
      const double phi = potential(trial);
      if (!std::isfinite(phi)) continue;
      if (phi <= phi0 + 1e-4 * t * slope) break;
      double trial_worst = 0.0;
      for (double v : gradient(product_form(ps, lp, trial))) trial_worst = std::max(trial_worst, std::abs(v));
      if (trial_worst < 0.5 * worst) break;
    }
    nu = trial;
  }

  for (std::size_t i = 0; i < m; ++i) {
    const double implied = 1.0 - std::log(out.point.x[ps.unit(i)]) / std::log(a);
    out.multiplier_error = std::max(out.multiplier_error, std::abs(nu[i] - implied));
  }
  if (out.multiplier_error > 1e-8) throw std::logic_error("Lagrange multipliers disagree with x_{e_i}");
  return out;
}

/// Largest |chi| over all pairs of distinct edges sharing a type. Requires
/// x > 0.
inline double max_abs_chi(const PackingSet& ps, const LyapunovParams& lp, const FluidPoint& x) {
  const auto& edges = ps.edges();
  double worst = 0.0;
  for (std::size_t m = 0; m < edges.size(); ++m)
    for (std::size_t n = m + 1; n < edges.size(); ++n)
      if (edges[m].type == edges[n].type) worst = std::max(worst, std::abs(chi(ps, lp, x, m, n)));
  return worst;
}

/// True when x is within r^(-1/2+eps)/I of the conservation laws and every
/// |chi| is at most delta1. Points with a zero coordinate are rejected
/// (chi is undefined there).
inline bool near_opt_certificate(const PackingSet& ps, const LyapunovParams& lp, const FluidPoint& x,
                                 std::span<const double> rho, double delta1, double epsilon, double r) {
  for (double v : x.x)
    if (!(v > 0.0)) return false;
  const double band = std::pow(r, -0.5 + epsilon) / static_cast<double>(ps.num_types());
  if (conservation_residual(ps, rho, x) > band) return false;
  return max_abs_chi(ps, lp, x) <= delta1;
}

/// Copy of x with coordinates floored at 1e-300 so chi and the drift can be
/// reported for simulated points. `floored` tells whether any coordinate
/// moved; such values must not be used for certification.
struct ReportingPoint {
  FluidPoint x;
  bool floored = false;
};

inline ReportingPoint floor_for_reporting(const FluidPoint& x) {
  ReportingPoint out{x, false};
  for (auto& v : out.x.x)
    if (v < 1e-300) {
      v = 1e-300;
      out.floored = true;
    }
  return out;
}

}  // namespace grand
