#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace grand::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

/// Two-sided Student-t quantile t_{df, 1 - alpha/2}.
inline double t_quantile(double df, double alpha = 0.05) {
  boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

/// Half-width of the t confidence interval for the mean of i.i.d.-ish
/// observations (replica means or batch means).
inline double ci_half_width(std::span<const double> v, double alpha = 0.05) {
  if (v.size() < 2) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(v.size());
  return t_quantile(n - 1.0, alpha) * std::sqrt(variance(v) / n);
}

struct WelchResult {
  double t;
  double df;
  double p_value;  ///< one-sided, H1: mean(a) > mean(b)
};

/// One-sided Welch t-test of mean(a) > mean(b).
inline WelchResult welch_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("Welch test needs two samples of size >= 2");
  const double va = variance(a) / static_cast<double>(a.size());
  const double vb = variance(b) / static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  const double se2 = va + vb;
  if (se2 == 0.0) return {diff > 0 ? std::numeric_limits<double>::infinity() : 0.0, 1.0, diff > 0 ? 0.0 : 1.0};
  const double t = diff / std::sqrt(se2);
  const double df = se2 * se2 /
                    (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  boost::math::students_t dist(df);
  return {t, df, boost::math::cdf(boost::math::complement(dist, t))};
}

}  // namespace grand::stats
