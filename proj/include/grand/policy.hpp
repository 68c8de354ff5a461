#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

#include "grand/packing.hpp"
#include "grand/random.hpp"
#include "grand/state.hpp"

namespace grand {

/// GRAND(Z^p): ceil(Z^p) zero-servers, 0 < p < 1.
struct GrandZp {
  double p;
};

/// GRAND(aZ): ceil(aZ) zero-servers, a > 0.
struct GrandAZ {
  double a;
};

class Policy {
 public:
  using Variant = std::variant<GrandZp, GrandAZ>;

  Policy(GrandZp v) : v_(v) {  // NOLINT(google-explicit-constructor)
    if (!(v.p > 0.0 && v.p < 1.0)) throw std::invalid_argument("GRAND(Z^p) needs 0 < p < 1");
  }
  Policy(GrandAZ v) : v_(v) {  // NOLINT(google-explicit-constructor)
    if (!(v.a > 0.0)) throw std::invalid_argument("GRAND(aZ) needs a > 0");
  }

  [[nodiscard]] const Variant& variant() const noexcept { return v_; }
  [[nodiscard]] bool is_zp() const noexcept { return std::holds_alternative<GrandZp>(v_); }
  /// p for GRAND(Z^p), a for GRAND(aZ).
  [[nodiscard]] double parameter() const noexcept {
    return std::visit([](auto v) { return first_field(v); }, v_);
  }
  [[nodiscard]] std::string name() const { return is_zp() ? "grand-zp" : "grand-az"; }

  friend bool operator==(const Policy& a, const Policy& b) {
    return a.is_zp() == b.is_zp() && a.parameter() == b.parameter();
  }

 private:
  static double first_field(GrandZp v) { return v.p; }
  static double first_field(GrandAZ v) { return v.a; }
  Variant v_;
};

namespace detail {
/// ceil(v), snapping v to an integer first when it is within 1e-9 of one.
inline std::int64_t guarded_ceil(double v) {
  const double nearest = std::round(v);
  if (std::abs(v - nearest) <= 1e-9) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(v));
}
}  // namespace detail

/// Number of zero-servers X_0 as a function of the total customer count.
inline std::int64_t zero_servers(const Policy& pol, std::int64_t z) {
  if (z <= 0) return 0;
  const double zd = static_cast<double>(z);
  if (const auto* zp = std::get_if<GrandZp>(&pol.variant()))
    return detail::guarded_ceil(std::pow(zd, zp->p));
  return detail::guarded_ceil(std::get<GrandAZ>(pol.variant()).a * zd);
}

/// GRAND placement of a type-i arrival. Returns the index (into ps.edges())
/// of the edge the arrival moves along.
///
/// A single uniform draw over the X_(i) available servers is walked over the
/// configuration buckets; zero-servers come first and map to the creation
/// edge (e_i, i), which is also the answer when nothing is available.
template <class Rng>
std::size_t place(const Policy& pol, const PackingSet& ps, const SystemState& st, std::size_t i, Rng& rng) {
  const std::int64_t x0 = zero_servers(pol, st.z());
  const std::int64_t n = avail(ps, st, i, x0);
  if (n == 0) return ps.creation_edge(i);
  auto u = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  if (u < x0) return ps.creation_edge(i);
  u -= x0;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const std::size_t target = ps.up(j, i);
    if (target == kInfeasible) continue;
    if (u < st.count(j)) return ps.edge_index(target, i);
    u -= st.count(j);
  }
  throw std::logic_error("placement draw fell outside the available servers");
}

}  // namespace grand
