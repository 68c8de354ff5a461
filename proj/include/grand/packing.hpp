#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grand {

/// Server content vector: counts[i] customers of type i in one server.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<int> counts) : counts_(std::move(counts)) {}

  static Configuration zero(std::size_t num_types) { return Configuration(std::vector<int>(num_types, 0)); }
  static Configuration unit(std::size_t num_types, std::size_t i) {
    auto c = zero(num_types);
    c.counts_.at(i) = 1;
    return c;
  }

  [[nodiscard]] std::size_t num_types() const noexcept { return counts_.size(); }
  [[nodiscard]] int operator[](std::size_t i) const { return counts_[i]; }
  [[nodiscard]] const std::vector<int>& counts() const noexcept { return counts_; }

  [[nodiscard]] int total() const { return std::accumulate(counts_.begin(), counts_.end(), 0); }
  [[nodiscard]] bool is_zero() const {
    return std::all_of(counts_.begin(), counts_.end(), [](int v) { return v == 0; });
  }

  /// prod_i counts[i]!
  [[nodiscard]] double factorial_product() const {
    double c = 1.0;
    for (int v : counts_)
      for (int j = 2; j <= v; ++j) c *= j;
    return c;
  }

  [[nodiscard]] Configuration plus(std::size_t i) const {
    auto c = *this;
    ++c.counts_.at(i);
    return c;
  }
  /// k - e_i; only meaningful when counts[i] > 0.
  [[nodiscard]] Configuration minus(std::size_t i) const {
    auto c = *this;
    --c.counts_.at(i);
    return c;
  }

  [[nodiscard]] bool dominated_by(const Configuration& other) const {
    for (std::size_t i = 0; i < counts_.size(); ++i)
      if (counts_[i] > other.counts_[i]) return false;
    return true;
  }

  [[nodiscard]] std::string label(char sep = '_') const {
    std::ostringstream os;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (i) os << sep;
      os << counts_[i];
    }
    return os.str();
  }

  friend auto operator<=>(const Configuration&, const Configuration&) = default;
  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<int> counts_;
};

/// Index sentinel for the empty-server configuration 0, which is not a member
/// of the nonzero set K.
inline constexpr std::size_t kEmptyServer = std::numeric_limits<std::size_t>::max();
/// Index sentinel for "not a feasible configuration".
inline constexpr std::size_t kInfeasible = kEmptyServer - 1;

/// Edge (k, i): the transition between k - e_i and k.
struct Edge {
  std::size_t config;  ///< index of k in K
  std::size_t type;    ///< i
  std::size_t lower;   ///< index of k - e_i in K, or kEmptyServer
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Monotone packing constraint: the feasible family K-bar (stored as the
/// nonzero part K in lexicographic order), its edge set M and kappa.
///
/// Immutable after construction.
class PackingSet {
 public:
  PackingSet() = default;

  [[nodiscard]] std::size_t num_types() const noexcept { return num_types_; }
  /// |K|, the number of nonzero configurations.
  [[nodiscard]] std::size_t size() const noexcept { return configs_.size(); }
  [[nodiscard]] const std::vector<Configuration>& configs() const noexcept { return configs_; }
  [[nodiscard]] const Configuration& config(std::size_t j) const { return configs_.at(j); }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] int kappa() const noexcept { return kappa_; }
  /// Configurations the downward closure added to the user's input.
  [[nodiscard]] const std::vector<Configuration>& added_by_closure() const noexcept { return added_; }

  /// Index in K, kEmptyServer for 0, kInfeasible otherwise.
  [[nodiscard]] std::size_t index_of(const Configuration& k) const {
    if (k.num_types() != num_types_) return kInfeasible;
    if (k.is_zero()) return kEmptyServer;
    auto it = index_.find(k);
    return it == index_.end() ? kInfeasible : it->second;
  }
  [[nodiscard]] bool contains(const Configuration& k) const { return index_of(k) != kInfeasible; }

  /// Index of k + e_i in K, or kInfeasible.
  [[nodiscard]] std::size_t up(std::size_t j, std::size_t i) const { return up_[j * num_types_ + i]; }
  /// Index of k - e_i in K (kEmptyServer for 0), or kInfeasible when k_i = 0.
  [[nodiscard]] std::size_t down(std::size_t j, std::size_t i) const { return down_[j * num_types_ + i]; }
  /// Index of e_i in K.
  [[nodiscard]] std::size_t unit(std::size_t i) const { return unit_.at(i); }
  /// Edge index of (k, i), or kInfeasible.
  [[nodiscard]] std::size_t edge_index(std::size_t j, std::size_t i) const {
    return edge_of_[j * num_types_ + i];
  }
  /// Edge index of the creation edge (e_i, i).
  [[nodiscard]] std::size_t creation_edge(std::size_t i) const { return edge_index(unit(i), i); }
  /// prod_i k_i! for each k in K.
  [[nodiscard]] const std::vector<double>& factorial_products() const noexcept { return factorials_; }

  friend bool operator==(const PackingSet& a, const PackingSet& b) {
    return a.num_types_ == b.num_types_ && a.configs_ == b.configs_;
  }

  /// Downward closure of `configs` together with every e_i.
  static PackingSet build_explicit(std::size_t num_types, const std::vector<Configuration>& configs);

  /// {k >= 0 : sum_i k_i size_i <= capacity componentwise}. sizes[i] is the
  /// resource vector of type i.
  static PackingSet build_vector_packing(const std::vector<std::vector<double>>& sizes,
                                         const std::vector<double>& capacity);

 private:
  PackingSet(std::size_t num_types, std::set<Configuration> closed, std::vector<Configuration> added);

  std::size_t num_types_ = 0;
  std::vector<Configuration> configs_;
  std::map<Configuration, std::size_t> index_;
  std::vector<std::size_t> up_, down_, edge_of_, unit_;
  std::vector<Edge> edges_;
  std::vector<double> factorials_;
  std::vector<Configuration> added_;
  int kappa_ = 1;
};

/// Smallest admissible GRAND(Z^p) exponent: p must exceed 1 - 1/(8 kappa).
inline double min_admissible_p(const PackingSet& ps) { return 1.0 - 1.0 / (8.0 * ps.kappa()); }

// ---------------------------------------------------------------------------

inline PackingSet::PackingSet(std::size_t num_types, std::set<Configuration> closed,
                              std::vector<Configuration> added)
    : num_types_(num_types), added_(std::move(added)) {
  for (const auto& k : closed)
    if (!k.is_zero()) configs_.push_back(k);
  for (std::size_t j = 0; j < configs_.size(); ++j) {
    index_.emplace(configs_[j], j);
    factorials_.push_back(configs_[j].factorial_product());
    kappa_ = std::max(kappa_, 1 + configs_[j].total());
  }
  const std::size_t n = configs_.size();
  up_.assign(n * num_types_, kInfeasible);
  down_.assign(n * num_types_, kInfeasible);
  edge_of_.assign(n * num_types_, kInfeasible);
  unit_.assign(num_types_, kInfeasible);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& k = configs_[j];
    for (std::size_t i = 0; i < num_types_; ++i) {
      up_[j * num_types_ + i] = index_of(k.plus(i));
      if (k[i] > 0) {
        const std::size_t lower = index_of(k.minus(i));
        down_[j * num_types_ + i] = lower;
        edge_of_[j * num_types_ + i] = edges_.size();
        edges_.push_back(Edge{j, i, lower});
      }
    }
  }
  for (std::size_t i = 0; i < num_types_; ++i) unit_[i] = index_of(Configuration::unit(num_types_, i));
}

inline PackingSet PackingSet::build_explicit(std::size_t num_types, const std::vector<Configuration>& configs) {
  if (num_types == 0) throw std::invalid_argument("packing set needs at least one customer type");
  if (configs.empty()) throw std::invalid_argument("packing set needs at least one configuration");
  std::set<Configuration> given;
  for (const auto& k : configs) {
    if (k.num_types() != num_types)
      throw std::invalid_argument("configuration (" + k.label(',') + ") has wrong dimension");
    for (int v : k.counts())
      if (v < 0) throw std::invalid_argument("configuration (" + k.label(',') + ") has a negative entry");
    given.insert(k);
  }
  for (std::size_t i = 0; i < num_types; ++i) given.insert(Configuration::unit(num_types, i));

  // Downward closure: one-step decrements until no new configurations appear.
  std::set<Configuration> closed;
  std::vector<Configuration> frontier(given.begin(), given.end());
  while (!frontier.empty()) {
    Configuration k = std::move(frontier.back());
    frontier.pop_back();
    if (!closed.insert(k).second) continue;
    for (std::size_t i = 0; i < num_types; ++i)
      if (k[i] > 0) frontier.push_back(k.minus(i));
  }
  std::vector<Configuration> added;
  std::set<Configuration> user(configs.begin(), configs.end());
  for (const auto& k : closed)
    if (!k.is_zero() && !user.contains(k)) added.push_back(k);
  return PackingSet(num_types, std::move(closed), std::move(added));
}

inline PackingSet PackingSet::build_vector_packing(const std::vector<std::vector<double>>& sizes,
                                                   const std::vector<double>& capacity) {
  const std::size_t num_types = sizes.size();
  if (num_types == 0) throw std::invalid_argument("vector packing needs at least one customer type");
  const std::size_t dims = capacity.size();
  for (double c : capacity)
    if (!(c >= 0.0)) throw std::invalid_argument("capacity entries must be nonnegative");
  const auto fits = [&](const std::vector<double>& load) {
    for (std::size_t d = 0; d < dims; ++d)
      if (load[d] > capacity[d] + 1e-9 * std::max(1.0, capacity[d])) return false;
    return true;
  };
  for (std::size_t i = 0; i < num_types; ++i) {
    if (sizes[i].size() != dims) throw std::invalid_argument("size vector of type " + std::to_string(i) + " has wrong dimension");
    bool positive = false;
    for (double s : sizes[i]) {
      if (!(s >= 0.0)) throw std::invalid_argument("sizes must be nonnegative");
      positive = positive || s > 0.0;
    }
    if (!positive) throw std::invalid_argument("type " + std::to_string(i) + " has zero size; K would be infinite");
    if (!fits(sizes[i])) throw std::invalid_argument("a single type-" + std::to_string(i) + " customer exceeds capacity");
  }

  std::set<Configuration> closed;
  std::vector<int> counts(num_types, 0);
  std::vector<double> load(dims, 0.0);
  // Depth-first enumeration over types; feasibility is monotone so each
  // coordinate loop stops at the first overflow.
  const auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == num_types) {
      closed.insert(Configuration(counts));
      return;
    }
    const std::vector<double> saved = load;
    for (counts[i] = 0;; ++counts[i]) {
      if (!fits(load)) break;
      self(self, i + 1);
      for (std::size_t d = 0; d < dims; ++d) load[d] += sizes[i][d];
    }
    counts[i] = 0;
    load = saved;
  };
  recurse(recurse, 0);
  return PackingSet(num_types, std::move(closed), {});
}

}  // namespace grand
