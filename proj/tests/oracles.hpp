#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "grand/packing.hpp"

namespace oracle {

struct VertexLp {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> x;
  std::vector<std::vector<double>> optimal_vertices;
  std::vector<std::vector<double>> vertices;  ///< every basic feasible solution
};

/// min sum_k x_k  s.t.  sum_k k_i x_k = rho_i, x >= 0, by enumerating every
/// basic feasible solution (all I-column subsets with a nonsingular basis).
inline VertexLp lp_by_vertices(const grand::PackingSet& ps, const std::vector<double>& rho) {
  const int m = static_cast<int>(ps.num_types());
  const int n = static_cast<int>(ps.size());
  Eigen::MatrixXd a(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) a(i, j) = ps.config(static_cast<std::size_t>(j))[static_cast<std::size_t>(i)];
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) b(i) = rho[static_cast<std::size_t>(i)];

  VertexLp out;
  std::vector<int> pick(static_cast<std::size_t>(m));
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  std::fill(mask.begin(), mask.begin() + m, true);
  std::vector<std::vector<double>> feasible;
  std::vector<double> values;
  do {
    int t = 0;
    for (int j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(j)]) pick[static_cast<std::size_t>(t++)] = j;
    Eigen::MatrixXd basis(m, m);
    for (int c = 0; c < m; ++c) basis.col(c) = a.col(pick[static_cast<std::size_t>(c)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.rank() < m) continue;
    const Eigen::VectorXd xb = lu.solve(b);
    if (xb.minCoeff() < -1e-12) continue;
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < m; ++c) x[static_cast<std::size_t>(pick[static_cast<std::size_t>(c)])] = std::max(0.0, xb(c));
    feasible.push_back(x);
    values.push_back(std::accumulate(x.begin(), x.end(), 0.0));
  } while (std::prev_permutation(mask.begin(), mask.end()));

  for (std::size_t v = 0; v < values.size(); ++v)
    if (values[v] < out.value) {
      out.value = values[v];
      out.x = feasible[v];
    }
  for (std::size_t v = 0; v < values.size(); ++v)
    if (values[v] <= out.value + 1e-12) out.optimal_vertices.push_back(feasible[v]);
  out.vertices = std::move(feasible);
  return out;
}

/// Closed form for I = 1, K = {(1), (2)}: x_2 = x_1^2 / (2a), x_1 + 2 x_2 = rho.
inline std::pair<double, double> two_slot_cvx(double a, double rho) {
  const double x1 = (-a + std::sqrt(a * a + 4.0 * a * rho)) / 2.0;
  return {x1, x1 * x1 / (2.0 * a)};
}

/// Central finite difference of f at x along coordinate j.
template <class F>
double central_difference(F&& f, std::vector<double> x, std::size_t j, double h) {
  const double x0 = x[j];
  x[j] = x0 + h;
  const double up = f(x);
  x[j] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Exact distance to the optimal segment of I = 2, K = {(0,1),(0,2),(1,0),(1,1),(2,0)},
/// rho = (0.5, 0.5): X* = {x_(1,1) = t, x_(2,0) = x_(0,2) = (0.5 - t)/2, t in [0, 0.5]}.
/// Coordinates in canonical order (0,1),(0,2),(1,0),(1,1),(2,0).
inline double segment_distance(const std::vector<double>& y) {
  const std::vector<double> p0{0.0, 0.25, 0.0, 0.0, 0.25};
  const std::vector<double> d{0.0, -0.5, 0.0, 1.0, -0.5};
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    num += d[j] * (y[j] - p0[j]);
    den += d[j] * d[j];
  }
  const double t = std::clamp(num / den, 0.0, 0.5);
  double s = 0.0;
  for (std::size_t j = 0; j < 5; ++j) s += (y[j] - p0[j] - t * d[j]) * (y[j] - p0[j] - t * d[j]);
  return std::sqrt(s);
}

/// Binomial 3-sigma acceptance for an observed count.
inline bool within_sigmas(double count, double n, double p, double sigmas = 3.0) {
  const double sd = std::sqrt(n * p * (1.0 - p));
  return std::abs(count - n * p) <= sigmas * sd;
}

/// Pearson chi-square statistic.
inline double chi_square(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j)
    if (expected[j] > 0.0) s += (observed[j] - expected[j]) * (observed[j] - expected[j]) / expected[j];
  return s;
}

}  // namespace oracle
