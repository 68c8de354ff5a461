#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grand/packing.hpp"

namespace grand {

/// Nonnegative real vector over K (canonical order), optionally augmented
/// with an x_0 value for analysis code.
struct FluidPoint {
  std::vector<double> x;
  std::optional<double> x0;

  FluidPoint() = default;
  explicit FluidPoint(std::vector<double> v) : x(std::move(v)) {}

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
  double& operator[](std::size_t j) { return x[j]; }
  double operator[](std::size_t j) const { return x[j]; }
  [[nodiscard]] double sum() const { return std::accumulate(x.begin(), x.end(), 0.0); }
  friend bool operator==(const FluidPoint&, const FluidPoint&) = default;
};

/// Exact CTMC state: X_k for every nonzero configuration, with the per-type
/// customer counts Y_i and total Z kept in sync.
class SystemState {
 public:
  SystemState() = default;
  explicit SystemState(const PackingSet& ps) : counts_(ps.size(), 0), y_(ps.num_types(), 0) {}

  /// Builds a state from raw counts; Y and Z are derived.
  SystemState(const PackingSet& ps, std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    if (counts_.size() != ps.size()) throw std::invalid_argument("state size does not match |K|");
    y_.assign(ps.num_types(), 0);
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] < 0) throw std::invalid_argument("negative server count");
      for (std::size_t i = 0; i < ps.num_types(); ++i) y_[i] += ps.config(j)[i] * counts_[j];
    }
    z_ = std::accumulate(y_.begin(), y_.end(), std::int64_t{0});
  }

  [[nodiscard]] const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
  [[nodiscard]] std::int64_t count(std::size_t j) const { return counts_[j]; }
  [[nodiscard]] const std::vector<std::int64_t>& y() const noexcept { return y_; }
  [[nodiscard]] std::int64_t z() const noexcept { return z_; }
  /// Number of occupied servers, sum_k X_k.
  [[nodiscard]] std::int64_t occupied() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
  }

  /// Arrival along `edge`: particle creation at e_i when k - e_i = 0,
  /// otherwise a particle moves from k - e_i to k.
  void apply_arrival(const Edge& edge) {
    if (edge.lower != kEmptyServer) {
      if (counts_.at(edge.lower) < 1)
        throw std::logic_error("arrival along an edge whose source configuration is empty");
      --counts_[edge.lower];
    }
    ++counts_.at(edge.config);
    ++y_.at(edge.type);
    ++z_;
  }

  /// Departure along `edge`: particle annihilation when k = e_i, otherwise a
  /// particle moves from k to k - e_i.
  void apply_departure(const Edge& edge) {
    if (counts_.at(edge.config) < 1) throw std::logic_error("departure from a configuration with no servers");
    --counts_[edge.config];
    if (edge.lower != kEmptyServer) ++counts_.at(edge.lower);
    --y_.at(edge.type);
    --z_;
  }

  /// Y and Z recomputed from scratch agree with the cached values.
  [[nodiscard]] bool caches_consistent(const PackingSet& ps) const {
    SystemState fresh(ps, counts_);
    return fresh.y_ == y_ && fresh.z_ == z_;
  }

  friend bool operator==(const SystemState&, const SystemState&) = default;

 private:
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> y_;
  std::int64_t z_ = 0;
};

inline SystemState apply_arrival(SystemState st, const Edge& edge) {
  st.apply_arrival(edge);
  return st;
}

inline SystemState apply_departure(SystemState st, const Edge& edge) {
  st.apply_departure(edge);
  return st;
}

/// X_(i): x0 zero-servers plus every occupied server that can take one more
/// type-i customer.
inline std::int64_t avail(const PackingSet& ps, const SystemState& st, std::size_t i, std::int64_t x0) {
  std::int64_t n = x0;
  for (std::size_t j = 0; j < ps.size(); ++j)
    if (ps.up(j, i) != kInfeasible) n += st.count(j);
  return n;
}

inline FluidPoint fluid_scale(const SystemState& st, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("fluid scale requires r > 0");
  FluidPoint p;
  p.x.reserve(st.counts().size());
  for (auto c : st.counts()) p.x.push_back(static_cast<double>(c) / r);
  return p;
}

/// One snapshot row: X_k in canonical order followed by Z.
inline std::string snapshot_csv_row(const SystemState& st) {
  std::string row;
  for (auto c : st.counts()) row += std::to_string(c) + ',';
  row += std::to_string(st.z());
  return row;
}

inline std::string snapshot_csv_header(const PackingSet& ps) {
  std::string row;
  for (const auto& k : ps.configs()) row += "X_" + k.label() + ',';
  row += "Z";
  return row;
}

}  // namespace grand
