#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace grand::lp {

/// Dense column-major view of a small constraint matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Solves the square system M z = rhs by Gaussian elimination with partial
/// pivoting. Throws on a singular basis.
inline std::vector<double> solve_square(std::vector<std::vector<double>> m, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-14) throw std::runtime_error("singular simplex basis");
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> z(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = rhs[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= m[k][c] * z[c];
    z[k] = s / m[k][k];
  }
  return z;
}

struct SimplexResult {
  std::vector<double> x;         ///< primal solution over all columns
  std::vector<double> dual;      ///< y with c_B = B^T y
  std::vector<std::size_t> basis;
  double objective = 0.0;
  int iterations = 0;
};

/// Primal simplex for  min c'x  s.t.  A x = b, x >= 0  from a given feasible
/// basis, with Bland's smallest-index rule for both the entering and the
/// leaving variable (no cycling on degenerate problems).
///
/// Columns whose `allowed` flag is false are held at zero.
class DenseSimplex {
 public:
  DenseSimplex(const Matrix& a, std::vector<double> b, std::vector<double> c)
      : a_(a), b_(std::move(b)), c_(std::move(c)) {
    if (b_.size() != a_.rows() || c_.size() != a_.cols()) throw std::invalid_argument("simplex dimension mismatch");
  }

  SimplexResult solve(std::vector<std::size_t> basis, const std::vector<bool>* allowed = nullptr,
                      int max_iterations = 10000) const {
    const std::size_t m = a_.rows(), n = a_.cols();
    if (basis.size() != m) throw std::invalid_argument("basis must have one column per row");
    std::vector<bool> in_basis(n, false);
    for (auto j : basis) in_basis.at(j) = true;

    SimplexResult res;
    for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
      const auto x_b = basic_values(basis);
      const auto y = duals(basis);
      // Entering column: smallest index with negative reduced cost.
      std::optional<std::size_t> enter;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_basis[j] || (allowed && !(*allowed)[j])) continue;
        if (reduced_cost(y, j) < -kTol) {
          enter = j;
          break;
        }
      }
      if (!enter) {
        res.basis = basis;
        res.dual = y;
        res.x.assign(n, 0.0);
        for (std::size_t r = 0; r < m; ++r) res.x[basis[r]] = std::max(0.0, x_b[r]);
        res.objective = 0.0;
        for (std::size_t j = 0; j < n; ++j) res.objective += c_[j] * res.x[j];
        return res;
      }
      const auto u = basis_solve(basis, column(*enter));
      // Leaving row: minimum ratio, ties to the smallest basic index.
      std::optional<std::size_t> leave;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m; ++r) {
        if (u[r] <= kPivotTol) continue;
        const double ratio = std::max(0.0, x_b[r]) / u[r];
        if (!leave || ratio < best - kTol || (ratio <= best + kTol && basis[r] < basis[*leave])) {
          leave = r;
          best = ratio;
        }
      }
      if (!leave) throw std::runtime_error("linear program is unbounded");
      in_basis[basis[*leave]] = false;
      basis[*leave] = *enter;
      in_basis[*enter] = true;
    }
    throw std::runtime_error("simplex iteration budget exhausted");
  }

 private:
  static constexpr double kTol = 1e-11;
  static constexpr double kPivotTol = 1e-11;

  [[nodiscard]] std::vector<double> column(std::size_t j) const {
    std::vector<double> col(a_.rows());
    for (std::size_t r = 0; r < a_.rows(); ++r) col[r] = a_(r, j);
    return col;
  }
  [[nodiscard]] std::vector<std::vector<double>> basis_matrix(const std::vector<std::size_t>& basis) const {
    const std::size_t m = a_.rows();
    std::vector<std::vector<double>> bm(m, std::vector<double>(m));
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t k = 0; k < m; ++k) bm[r][k] = a_(r, basis[k]);
    return bm;
  }
  [[nodiscard]] std::vector<double> basis_solve(const std::vector<std::size_t>& basis, std::vector<double> rhs) const {
    return solve_square(basis_matrix(basis), std::move(rhs));
  }
  [[nodiscard]] std::vector<double> basic_values(const std::vector<std::size_t>& basis) const {
    return basis_solve(basis, b_);
  }
  [[nodiscard]] std::vector<double> duals(const std::vector<std::size_t>& basis) const {
    const std::size_t m = a_.rows();
    auto bm = basis_matrix(basis);
    std::vector<std::vector<double>> bt(m, std::vector<double>(m));
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t k = 0; k < m; ++k) bt[r][k] = bm[k][r];
    std::vector<double> cb(m);
    for (std::size_t k = 0; k < m; ++k) cb[k] = c_[basis[k]];
    return solve_square(std::move(bt), std::move(cb));
  }
  [[nodiscard]] double reduced_cost(const std::vector<double>& y, std::size_t j) const {
    double d = c_[j];
    for (std::size_t r = 0; r < a_.rows(); ++r) d -= y[r] * a_(r, j);
    return d;
  }

  Matrix a_;
  std::vector<double> b_, c_;
};

}  // namespace grand::lp
