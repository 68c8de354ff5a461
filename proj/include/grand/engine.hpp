#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "grand/packing.hpp"
#include "grand/policy.hpp"
#include "grand/random.hpp"
#include "grand/state.hpp"
#include "grand/stats.hpp"

namespace grand {

enum class StartMode { Stationary, Empty };

/// Thresholds for the three steady-state conditions monitored during a run:
/// |Z/r - 1| <= r^(-1/2+eps), |y_i - rho_i| <= r^(-1/2+eps)/I and
/// x_k >= c r^(s-1). When `c` is unset it is calibrated from the second half
/// of the warm-up as half the observed floor of x_k / r^(s-1).
struct DiagnosticParams {
  double epsilon = 0.25;
  double s = 0.9;
  std::optional<double> c;
};

struct RunSpec {
  PackingSet packing;
  std::vector<double> lambda;
  std::vector<double> mu;
  double r = 1.0;
  Policy policy;
  double warmup_time = 0.0;
  double measure_time = 0.0;
  std::uint64_t seed = 0;
  StartMode start = StartMode::Stationary;
  DiagnosticParams diagnostics{};
  int batches = 20;
  int tail_samples = 200;

  /// Validates the inputs, rescales lambda so that sum_i lambda_i/mu_i = 1,
  /// and applies the default horizons (10 and 50 times the longest mean
  /// service time).
  RunSpec(PackingSet ps, std::vector<double> lambda_in, std::vector<double> mu_in, double scale, Policy pol,
          std::uint64_t seed_in = 0)
      : packing(std::move(ps)), lambda(std::move(lambda_in)), mu(std::move(mu_in)), r(scale), policy(pol),
        seed(seed_in) {
    const std::size_t n = packing.num_types();
    if (lambda.size() != n || mu.size() != n) throw std::invalid_argument("lambda and mu need one entry per type");
    double load = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(lambda[i] > 0.0) || !(mu[i] > 0.0)) throw std::invalid_argument("rates must be positive");
      load += lambda[i] / mu[i];
    }
    for (auto& l : lambda) l /= load;
    if (!(r >= 1.0)) throw std::invalid_argument("scale r must be >= 1");
    const double slowest = *std::min_element(mu.begin(), mu.end());
    warmup_time = 10.0 / slowest;
    measure_time = 50.0 / slowest;
  }

  [[nodiscard]] std::vector<double> rho() const {
    std::vector<double> out(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) out[i] = lambda[i] / mu[i];
    return out;
  }
};

struct RunRecord {
  std::uint64_t seed = 0;
  double r = 0.0;
  FluidPoint mean_x;               ///< time average of X_k / r
  std::vector<double> mean_y;      ///< time average of Y_i
  double mean_z = 0.0;             ///< time average of Z
  std::vector<double> ci_x;        ///< batch-means 95% half-widths for mean_x
  std::vector<double> ci_y;
  double ci_z = 0.0;
  double ci_occupied = 0.0;        ///< half-width for sum_k mean_x_k
  std::vector<std::vector<double>> batch_x;  ///< per-batch mean of X_k / r
  std::uint64_t events = 0;        ///< events inside the measurement window
  double frac_cond1 = 0.0;
  double frac_cond11 = 0.0;
  double frac_cond2 = 0.0;
  double diag_c = 0.0;
  std::vector<std::int64_t> min_counts;  ///< min X_k over the window
  std::int64_t min_x0 = 0;               ///< min zero-server count over the window
  std::int64_t min_z = 0;
  std::vector<std::vector<std::int64_t>> y_samples;  ///< Y at equally spaced window times
  double end_time = 0.0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct Event {
  enum class Kind { Arrival, Departure } kind;
  std::size_t type;
  std::size_t edge;  ///< index into PackingSet::edges()
  friend bool operator==(const Event&, const Event&) = default;
};

struct StepResult {
  double dt;
  Event event;
};

/// Departure rate along edge (k, i): k_i mu_i X_k.
inline double departure_rate(const RunSpec& spec, const SystemState& st, const Edge& e) {
  return spec.packing.config(e.config)[e.type] * spec.mu[e.type] * static_cast<double>(st.count(e.config));
}

/// Total event rate sum_i lambda_i r + sum_{(k,i)} k_i mu_i X_k.
inline double total_rate(const RunSpec& spec, const SystemState& st, bool departures = true) {
  double rate = 0.0;
  for (double l : spec.lambda) rate += l * spec.r;
  if (departures)
    for (const auto& e : spec.packing.edges()) rate += departure_rate(spec, st, e);
  return rate;
}

/// Draws the holding time and the next event without touching the state.
/// Arrivals are routed through the policy; departures pick an edge with
/// probability proportional to its rate.
template <class Rng>
StepResult draw_event(const SystemState& st, const RunSpec& spec, Rng& rng, bool departures = true) {
  const double rate = total_rate(spec, st, departures);
  const double dt = exponential(rng, rate);
  double u = uniform01(rng) * rate;
  const std::size_t n = spec.lambda.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = spec.lambda[i] * spec.r;
    if (u < a || (!departures && i + 1 == n)) return {dt, {Event::Kind::Arrival, i, place(spec.policy, spec.packing, st, i, rng)}};
    u -= a;
  }
  const auto& edges = spec.packing.edges();
  std::size_t last = edges.size();
  for (std::size_t m = 0; m < edges.size(); ++m) {
    const double d = departure_rate(spec, st, edges[m]);
    if (d <= 0.0) continue;
    if (u < d) return {dt, {Event::Kind::Departure, edges[m].type, m}};
    u -= d;
    last = m;
  }
  // Rounding pushed u past the final bucket.
  if (last == edges.size()) {
    const std::size_t i = n - 1;
    return {dt, {Event::Kind::Arrival, i, place(spec.policy, spec.packing, st, i, rng)}};
  }
  return {dt, {Event::Kind::Departure, edges[last].type, last}};
}

inline void apply_event(SystemState& st, const PackingSet& ps, const Event& ev) {
  const Edge& e = ps.edges().at(ev.edge);
  if (ev.kind == Event::Kind::Arrival)
    st.apply_arrival(e);
  else
    st.apply_departure(e);
}

/// One Gillespie step: draw the holding time and event, then apply it.
template <class Rng>
StepResult step(SystemState& st, const RunSpec& spec, Rng& rng, bool departures = true) {
  StepResult res = draw_event(st, spec, rng, departures);
  apply_event(st, spec.packing, res.event);
  return res;
}

struct ConditionFlags {
  bool total_near_r;      ///< |Z/r - 1| <= r^(-1/2+eps)
  bool types_near_rho;    ///< |sum_k k_i x_k - rho_i| <= r^(-1/2+eps)/I for all i
  bool occupancy_floor;   ///< x_k >= c r^(s-1) for all k
};

inline ConditionFlags check_conditions(const PackingSet& ps, const SystemState& st, std::span<const double> rho,
                                       double r, double epsilon, double c, double s) {
  const double band = std::pow(r, -0.5 + epsilon);
  ConditionFlags f{};
  f.total_near_r = std::abs(static_cast<double>(st.z()) / r - 1.0) <= band;
  f.types_near_rho = true;
  const double per_type = band / static_cast<double>(ps.num_types());
  for (std::size_t i = 0; i < ps.num_types(); ++i)
    if (std::abs(static_cast<double>(st.y()[i]) / r - rho[i]) > per_type) f.types_near_rho = false;
  const double floor = c * std::pow(r, s - 1.0);
  f.occupancy_floor = true;
  for (auto cnt : st.counts())
    if (static_cast<double>(cnt) / r < floor) f.occupancy_floor = false;
  return f;
}

/// s(k) = 1 - (1 + sum_i k_i)(1 - p): the exponent of the high-probability
/// floor X_k >= c r^s(k) under GRAND(Z^p).
inline double s_exponent(const Configuration& k, double p) { return 1.0 - (1.0 + k.total()) * (1.0 - p); }

/// Builds X(0): Y_i(0) ~ Poisson(rho_i r) customers, injected one at a time
/// in shuffled type order through the policy's own placement rule.
template <class Rng>
SystemState initial_state(const RunSpec& spec, Rng& rng) {
  SystemState st(spec.packing);
  if (spec.start == StartMode::Empty) return st;
  const auto rho = spec.rho();
  std::vector<std::size_t> arrivals;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const auto n = poisson(rng, rho[i] * spec.r);
    arrivals.insert(arrivals.end(), static_cast<std::size_t>(n), i);
  }
  shuffle(rng, arrivals);
  for (std::size_t i : arrivals)
    st.apply_arrival(spec.packing.edges()[place(spec.policy, spec.packing, st, i, rng)]);
  return st;
}

namespace detail {

/// Time-weighted accumulators over the measurement window, split into
/// equal-length batches.
class WindowAccumulator {
 public:
  WindowAccumulator(const RunSpec& spec, double begin, double length)
      : spec_(spec), rho_(spec.rho()), begin_(begin), length_(length), batch_len_(length / spec.batches),
        area_x_(spec.batches, std::vector<double>(spec.packing.size(), 0.0)),
        area_y_(spec.batches, std::vector<double>(spec.packing.num_types(), 0.0)), area_z_(spec.batches, 0.0),
        min_counts_(spec.packing.size(), std::numeric_limits<std::int64_t>::max()) {}

  void set_floor_constant(double c) { c_ = c; }

  /// State `st` held on [t0, t1).
  void add(const SystemState& st, double t0, double t1) {
    const double end = begin_ + length_;
    const double a = std::max(t0, begin_);
    const double b = std::min(t1, end);
    while (next_sample_ < spec_.tail_samples && sample_time(next_sample_) < t1) {
      if (sample_time(next_sample_) >= t0) samples_.push_back(st.y());
      ++next_sample_;
    }
    if (!(b > a)) return;
    for (std::size_t j = 0; j < min_counts_.size(); ++j) min_counts_[j] = std::min(min_counts_[j], st.count(j));
    min_z_ = std::min(min_z_, st.z());

    auto first = static_cast<int>((a - begin_) / batch_len_);
    first = std::clamp(first, 0, spec_.batches - 1);
    for (int bi = first; bi < spec_.batches; ++bi) {
      const double lo = std::max(a, begin_ + bi * batch_len_);
      const double hi = std::min(b, bi + 1 == spec_.batches ? end : begin_ + (bi + 1) * batch_len_);
      if (hi <= lo) {
        if (begin_ + bi * batch_len_ >= b) break;
        continue;
      }
      const double w = hi - lo;
      for (std::size_t j = 0; j < st.counts().size(); ++j) area_x_[bi][j] += w * static_cast<double>(st.count(j));
      for (std::size_t i = 0; i < st.y().size(); ++i) area_y_[bi][i] += w * static_cast<double>(st.y()[i]);
      area_z_[bi] += w * static_cast<double>(st.z());
    }
    const auto f = check_conditions(spec_.packing, st, rho_, spec_.r, spec_.diagnostics.epsilon, c_,
                                    spec_.diagnostics.s);
    const double w = b - a;
    if (f.total_near_r) time_cond1_ += w;
    if (f.types_near_rho) time_cond11_ += w;
    if (f.occupancy_floor) time_cond2_ += w;
    ++intervals_;
  }

  RunRecord finish() const {
    RunRecord rec;
    rec.seed = spec_.seed;
    rec.r = spec_.r;
    const std::size_t nk = spec_.packing.size();
    const std::size_t ni = spec_.packing.num_types();
    const int nb = spec_.batches;
    rec.batch_x.assign(nb, std::vector<double>(nk));
    std::vector<std::vector<double>> by(ni, std::vector<double>(nb));
    std::vector<std::vector<double>> bx(nk, std::vector<double>(nb));
    std::vector<double> bz(nb), bocc(nb, 0.0);
    for (int b = 0; b < nb; ++b) {
      for (std::size_t j = 0; j < nk; ++j) {
        rec.batch_x[b][j] = area_x_[b][j] / (batch_len_ * spec_.r);
        bx[j][b] = rec.batch_x[b][j];
        bocc[b] += rec.batch_x[b][j];
      }
      for (std::size_t i = 0; i < ni; ++i) by[i][b] = area_y_[b][i] / batch_len_;
      bz[b] = area_z_[b] / batch_len_;
    }
    rec.mean_x.x.resize(nk);
    rec.ci_x.resize(nk);
    for (std::size_t j = 0; j < nk; ++j) {
      rec.mean_x[j] = stats::mean(bx[j]);
      rec.ci_x[j] = stats::ci_half_width(bx[j]);
    }
    rec.mean_y.resize(ni);
    rec.ci_y.resize(ni);
    for (std::size_t i = 0; i < ni; ++i) {
      rec.mean_y[i] = stats::mean(by[i]);
      rec.ci_y[i] = stats::ci_half_width(by[i]);
    }
    rec.mean_z = stats::mean(bz);
    rec.ci_z = stats::ci_half_width(bz);
    rec.ci_occupied = stats::ci_half_width(bocc);
    rec.frac_cond1 = std::clamp(time_cond1_ / length_, 0.0, 1.0);
    rec.frac_cond11 = std::clamp(time_cond11_ / length_, 0.0, 1.0);
    rec.frac_cond2 = std::clamp(time_cond2_ / length_, 0.0, 1.0);
    rec.diag_c = c_;
    rec.min_counts = min_counts_;
    rec.min_z = min_z_;
    rec.min_x0 = zero_servers(spec_.policy, min_z_);
    rec.y_samples = samples_;
    rec.events = intervals_ > 0 ? intervals_ - 1 : 0;
    return rec;
  }

 private:
  [[nodiscard]] double sample_time(int j) const {
    return begin_ + (j + 0.5) * length_ / static_cast<double>(spec_.tail_samples);
  }

  const RunSpec& spec_;
  std::vector<double> rho_;
  double begin_, length_, batch_len_;
  double c_ = 0.0;
  std::vector<std::vector<double>> area_x_, area_y_;
  std::vector<double> area_z_;
  double time_cond1_ = 0.0, time_cond11_ = 0.0, time_cond2_ = 0.0;
  std::vector<std::int64_t> min_counts_;
  std::int64_t min_z_ = std::numeric_limits<std::int64_t>::max();
  std::vector<std::vector<std::int64_t>> samples_;
  int next_sample_ = 0;
  std::uint64_t intervals_ = 0;
};

}  // namespace detail

/// Runs the CTMC for warmup_time + measure_time of model time and returns
/// time-weighted averages over the measurement window. Deterministic in
/// spec.seed.
inline RunRecord simulate(const RunSpec& spec) {
  if (!(spec.warmup_time > 0.0) || !(spec.measure_time > 0.0))
    throw std::invalid_argument("warm-up and measurement times must be positive");
  if (spec.batches < 2) throw std::invalid_argument("need at least two batches");
  CounterRng rng(spec.seed);
  SystemState st = initial_state(spec, rng);

  const double warm = spec.warmup_time;
  const double end = warm + spec.measure_time;
  detail::WindowAccumulator acc(spec, warm, spec.measure_time);

  const bool calibrate = !spec.diagnostics.c.has_value();
  const double pilot_begin = warm / 2.0;
  double pilot_floor = std::numeric_limits<double>::infinity();
  const double floor_scale = std::pow(spec.r, 1.0 - spec.diagnostics.s);
  bool calibrated = !calibrate;
  if (!calibrate) acc.set_floor_constant(*spec.diagnostics.c);

  double t = 0.0;
  while (true) {
    const StepResult next = draw_event(st, spec, rng);
    const double t_next = t + next.dt;
    if (calibrate && t_next > pilot_begin && t < warm) {
      for (auto c : st.counts())
        pilot_floor = std::min(pilot_floor, static_cast<double>(c) / spec.r * floor_scale);
    }
    if (!calibrated && t_next > warm) {
      acc.set_floor_constant(std::isfinite(pilot_floor) ? 0.5 * pilot_floor : 0.0);
      calibrated = true;
    }
    acc.add(st, t, std::min(t_next, end));
    if (t_next >= end) break;
    apply_event(st, spec.packing, next.event);
    t = t_next;
  }
  RunRecord rec = acc.finish();
  rec.end_time = end;
  return rec;
}

}  // namespace grand
