#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <string>
#include <span>
#include <thread>
#include <tuple>
#include <limits>
#include <vector>

#include "grand/engine.hpp"
#include "grand/fluid.hpp"
#include "grand/packing.hpp"
#include "grand/policy.hpp"
#include "grand/random.hpp"
#include "grand/stats.hpp"

namespace grand {

/// exp(-w^2 / (4 nu)): bound on each one-sided tail P(V >= nu + w) and
/// P(V <= nu - w) of a Poisson(nu) variable, for 0 <= w <= nu.
inline double poisson_tail_bound(double nu, double w) {
  if (!(nu > 0.0)) throw std::domain_error("Poisson mean must be positive");
  if (w < 0.0 || w > nu) throw std::domain_error("tail bound needs 0 <= w <= nu");
  return std::exp(-w * w / (4.0 * nu));
}

/// Formats with 17 significant digits.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SweepSpec {
  explicit SweepSpec(RunSpec b) : base(std::move(b)) {}

  RunSpec base;                 ///< packing, rates, horizons, diagnostics; r/policy/seed are overridden
  std::vector<double> r_grid;
  std::vector<Policy> policies;
  int replicas = 8;
  std::uint64_t root_seed = 0;
  unsigned threads = 0;         ///< 0: hardware concurrency
  double distance_tol = 1e-7;

  void validate() const {
    if (r_grid.empty()) throw std::invalid_argument("r_grid is empty");
    for (std::size_t j = 1; j < r_grid.size(); ++j)
      if (!(r_grid[j] > r_grid[j - 1])) throw std::invalid_argument("r_grid must be strictly increasing");
    if (policies.empty()) throw std::invalid_argument("no policies to sweep");
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  }

  [[nodiscard]] std::size_t cell_count() const { return policies.size() * r_grid.size() * replicas; }
  [[nodiscard]] std::size_t cell_index(std::size_t policy, std::size_t r_index, int replica) const {
    return (policy * r_grid.size() + r_index) * static_cast<std::size_t>(replicas) + static_cast<std::size_t>(replica);
  }
  /// Seed of one replica, derived from the root seed and the cell index only.
  [[nodiscard]] std::uint64_t cell_seed(std::size_t index) const { return CounterRng(root_seed).split(index).key(); }
};

struct CellResult {
  std::size_t policy = 0;
  std::size_t r_index = 0;
  int replica = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunRecord record;
  double objective_gap = 0.0;  ///< sum_k mean_x_k - L*
  double distance = 0.0;       ///< d(mean_x, X*)
};

struct CellSummary {
  std::size_t policy = 0;
  std::size_t r_index = 0;
  double r = 0.0;
  int replicas_ok = 0;
  double gap_over_r = 0.0;  ///< fluid-scale objective gap (unscaled gap / r)
  double ci_gap = 0.0;
  double distance = 0.0;
  double ci_distance = 0.0;
  double frac_cond1 = 0.0, frac_cond11 = 0.0, frac_cond2 = 0.0;
  std::vector<double> gap_samples;       ///< per replica (or per batch for one replica)
  std::vector<double> distance_samples;
};

struct TrendVerdict {
  std::size_t policy = 0;
  std::string metric;       ///< "objective" or "distance"
  std::string kind;         ///< "decreasing" (Z^p) or "stabilizing" (aZ)
  bool monotone = false;    ///< point estimates strictly decreasing over the grid
  bool ci_separated = false;
  double welch_p = 1.0;     ///< one-sided, first grid point > last
  bool passed = false;
};

struct GapReport {
  LpSolution lp;
  std::vector<CellSummary> cells;  ///< ordered by (policy, r)
  std::vector<TrendVerdict> verdicts;

  [[nodiscard]] const CellSummary& cell(std::size_t policy, std::size_t r_index) const {
    for (const auto& c : cells)
      if (c.policy == policy && c.r_index == r_index) return c;
    throw std::out_of_range("no such sweep cell");
  }
};

struct SweepResult {
  std::vector<CellResult> runs;  ///< indexed by SweepSpec::cell_index
  GapReport report;
};

namespace detail {

/// Mean and CI half-width, computed on sorted values so the result does not
/// depend on the order replicas finished in.
inline std::pair<double, double> summarize(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {stats::mean(v), stats::ci_half_width(v)};
}

inline void run_cell(const SweepSpec& spec, const LpSolution& lp, std::span<const double> rho, CellResult& cell) {
  try {
    RunSpec rs = spec.base;
    rs.r = spec.r_grid[cell.r_index];
    rs.policy = spec.policies[cell.policy];
    rs.seed = cell.seed;
    cell.record = simulate(rs);
    cell.objective_gap = objective_gap(cell.record.mean_x, lp.L_star);
    cell.distance = distance_to_optimal_set(rs.packing, rho, lp, cell.record.mean_x, spec.distance_tol).distance;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
}

inline CellSummary summarize_cell(const SweepSpec& spec, const LpSolution& lp, std::span<const double> rho,
                                  const std::vector<CellResult>& runs, std::size_t policy, std::size_t r_index) {
  CellSummary s;
  s.policy = policy;
  s.r_index = r_index;
  s.r = spec.r_grid[r_index];
  std::vector<double> c1, c11, c2;
  const CellResult* only = nullptr;
  for (int rep = 0; rep < spec.replicas; ++rep) {
    const auto& run = runs[spec.cell_index(policy, r_index, rep)];
    if (!run.ok) continue;
    ++s.replicas_ok;
    only = &run;
    s.gap_samples.push_back(run.objective_gap);
    s.distance_samples.push_back(run.distance);
    c1.push_back(run.record.frac_cond1);
    c11.push_back(run.record.frac_cond11);
    c2.push_back(run.record.frac_cond2);
  }
  if (s.replicas_ok == 0) {
    s.gap_over_r = s.distance = std::numeric_limits<double>::quiet_NaN();
    s.ci_gap = s.ci_distance = std::numeric_limits<double>::infinity();
    return s;
  }
  if (s.replicas_ok == 1) {
    // Fall back to batch means of the single run.
    s.gap_samples.clear();
    s.distance_samples.clear();
    for (const auto& bx : only->record.batch_x) {
      FluidPoint p(bx);
      s.gap_samples.push_back(objective_gap(p, lp.L_star));
      s.distance_samples.push_back(distance_to_optimal_set(spec.base.packing, rho, lp, p, spec.distance_tol).distance);
    }
  }
  std::tie(s.gap_over_r, s.ci_gap) = summarize(s.gap_samples);
  std::tie(s.distance, s.ci_distance) = summarize(s.distance_samples);
  if (s.replicas_ok == 1) {
    s.gap_over_r = only->objective_gap;
    s.distance = only->distance;
  }
  s.frac_cond1 = summarize(c1).first;
  s.frac_cond11 = summarize(c11).first;
  s.frac_cond2 = summarize(c2).first;
  return s;
}

inline TrendVerdict judge(const SweepSpec& spec, const GapReport& rep, std::size_t policy, bool distance) {
  TrendVerdict v;
  v.policy = policy;
  v.metric = distance ? "distance" : "objective";
  const bool zp = spec.policies[policy].is_zp();
  v.kind = zp ? "decreasing" : "stabilizing";
  const auto mean_of = [&](const CellSummary& c) { return distance ? c.distance : c.gap_over_r; };
  const auto ci_of = [&](const CellSummary& c) { return distance ? c.ci_distance : c.ci_gap; };
  const auto samples_of = [&](const CellSummary& c) { return distance ? c.distance_samples : c.gap_samples; };
  const std::size_t n = spec.r_grid.size();

  v.monotone = true;
  for (std::size_t j = 1; j < n; ++j)
    if (!(mean_of(rep.cell(policy, j)) < mean_of(rep.cell(policy, j - 1)))) v.monotone = false;
  const auto& first = rep.cell(policy, 0);
  const auto& last = rep.cell(policy, n - 1);
  v.ci_separated = mean_of(first) - ci_of(first) > mean_of(last) + ci_of(last);
  const auto fs = samples_of(first), ls = samples_of(last);
  if (fs.size() >= 2 && ls.size() >= 2) v.welch_p = stats::welch_greater(fs, ls).p_value;

  if (zp) {
    v.passed = n >= 2 && v.monotone && v.ci_separated && v.welch_p < 1e-2;
  } else if (n >= 2) {
    const auto& prev = rep.cell(policy, n - 2);
    v.passed = std::abs(mean_of(prev) - mean_of(last)) <= ci_of(prev) + ci_of(last);
  }
  return v;
}

}  // namespace detail

/// Runs every (policy, r, replica) cell, aggregates per (policy, r) and
/// computes the trend verdicts. Engine failures mark a cell as failed
/// without aborting the sweep. Output is independent of thread count.
inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto rho = spec.base.rho();
  SweepResult out;
  out.report.lp = solve_lp(spec.base.packing, rho);

  out.runs.resize(spec.cell_count());
  for (std::size_t p = 0; p < spec.policies.size(); ++p)
    for (std::size_t ri = 0; ri < spec.r_grid.size(); ++ri)
      for (int rep = 0; rep < spec.replicas; ++rep) {
        const std::size_t idx = spec.cell_index(p, ri, rep);
        auto& c = out.runs[idx];
        c.policy = p;
        c.r_index = ri;
        c.replica = rep;
        c.seed = spec.cell_seed(idx);
      }

  unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(out.runs.size()));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t idx; (idx = next.fetch_add(1)) < out.runs.size();)
      detail::run_cell(spec, out.report.lp, rho, out.runs[idx]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t p = 0; p < spec.policies.size(); ++p)
    for (std::size_t ri = 0; ri < spec.r_grid.size(); ++ri)
      out.report.cells.push_back(detail::summarize_cell(spec, out.report.lp, rho, out.runs, p, ri));
  for (std::size_t p = 0; p < spec.policies.size(); ++p) {
    out.report.verdicts.push_back(detail::judge(spec, out.report, p, false));
    out.report.verdicts.push_back(detail::judge(spec, out.report, p, true));
  }
  return out;
}

// --- CSV output -------------------------------------------------------------

inline void write_runs_header(std::ostream& os, const PackingSet& ps) {
  os << "run_id,policy,param,r,replica,seed,status";
  for (const auto& k : ps.configs()) os << ",x_" << k.label();
  for (std::size_t i = 0; i < ps.num_types(); ++i) os << ",Y_" << i + 1;
  os << ",Z,occupied,objective_gap,distance,frac_cond1,frac_cond11,frac_cond2,diag_c";
  for (const auto& k : ps.configs()) os << ",ci_x_" << k.label();
  for (std::size_t i = 0; i < ps.num_types(); ++i) os << ",ci_Y_" << i + 1;
  os << ",ci_Z,ci_occupied,min_X0";
  for (const auto& k : ps.configs()) os << ",min_X_" << k.label();
  os << '\n';
}

inline void write_run_row(std::ostream& os, const PackingSet& ps, std::size_t run_id, const Policy& pol, double r,
                          const CellResult& c) {
  os << run_id << ',' << pol.name() << ',' << fmt17(pol.parameter()) << ',' << fmt17(r) << ',' << c.replica << ','
     << c.seed << ',' << (c.ok ? "ok" : "failed");
  if (!c.ok) {
    const std::size_t blanks = 3 * ps.size() + 2 * ps.num_types() + 11;
    for (std::size_t j = 0; j < blanks; ++j) os << ',';
    os << '\n';
    return;
  }
  const auto& rec = c.record;
  for (double v : rec.mean_x.x) os << ',' << fmt17(v);
  for (double v : rec.mean_y) os << ',' << fmt17(v);
  os << ',' << fmt17(rec.mean_z) << ',' << fmt17(rec.mean_x.sum()) << ',' << fmt17(c.objective_gap) << ','
     << fmt17(c.distance) << ',' << fmt17(rec.frac_cond1) << ',' << fmt17(rec.frac_cond11) << ','
     << fmt17(rec.frac_cond2) << ',' << fmt17(rec.diag_c);
  for (double v : rec.ci_x) os << ',' << fmt17(v);
  for (double v : rec.ci_y) os << ',' << fmt17(v);
  os << ',' << fmt17(rec.ci_z) << ',' << fmt17(rec.ci_occupied) << ',' << rec.min_x0;
  for (auto v : rec.min_counts) os << ',' << v;
  os << '\n';
}

inline void write_runs_csv(std::ostream& os, const SweepSpec& spec, const SweepResult& res) {
  write_runs_header(os, spec.base.packing);
  for (std::size_t idx = 0; idx < res.runs.size(); ++idx) {
    const auto& c = res.runs[idx];
    write_run_row(os, spec.base.packing, idx, spec.policies[c.policy], spec.r_grid[c.r_index], c);
  }
}

inline void write_report_csv(std::ostream& os, const SweepSpec& spec, const GapReport& rep) {
  os << "policy,param,r,replicas_ok,gap_over_r,ci_gap,distance,ci_distance,frac_cond1,frac_cond11,frac_cond2\n";
  for (const auto& c : rep.cells) {
    const auto& pol = spec.policies[c.policy];
    os << pol.name() << ',' << fmt17(pol.parameter()) << ',' << fmt17(c.r) << ',' << c.replicas_ok << ','
       << fmt17(c.gap_over_r) << ',' << fmt17(c.ci_gap) << ',' << fmt17(c.distance) << ',' << fmt17(c.ci_distance)
       << ',' << fmt17(c.frac_cond1) << ',' << fmt17(c.frac_cond11) << ',' << fmt17(c.frac_cond2) << '\n';
  }
}

inline void write_verdicts(std::ostream& os, const SweepSpec& spec, const GapReport& rep) {
  os << "L* = " << fmt17(rep.lp.L_star) << '\n';
  for (const auto& v : rep.verdicts) {
    const auto& pol = spec.policies[v.policy];
    os << (v.passed ? "PASS " : "FAIL ") << pol.name() << '(' << fmt17(pol.parameter()) << ") "
       << (v.metric == "objective" ? "gap/r" : "distance") << ' ' << v.kind
       << ": monotone=" << (v.monotone ? "yes" : "no")
       << " ci_separated=" << (v.ci_separated ? "yes" : "no") << " welch_p=" << fmt17(v.welch_p) << '\n';
  }
  const double pmin = min_admissible_p(spec.base.packing);
  for (const auto& pol : spec.policies)
    if (pol.is_zp() && pol.parameter() <= pmin)
      os << "WARNING p = " << fmt17(pol.parameter()) << " is below the admissible threshold " << fmt17(pmin) << '\n';
}

// --- occupancy floors ---------------------------------------------------------

struct FloorRow {
  double r = 0.0;
  std::string config;   ///< label of k ("0" for the empty configuration)
  double s = 0.0;       ///< s(k)
  std::int64_t min_count = 0;
  double r_pow_s = 0.0;
  double ratio = 0.0;   ///< min_count / r^s(k)
};

/// Minimum over the measurement window of X_k (and of X_0) against r^s(k).
inline std::vector<FloorRow> occupancy_floor_report(const PackingSet& ps, std::span<const RunRecord> records,
                                                    double p) {
  std::vector<FloorRow> rows;
  for (const auto& rec : records) {
    const auto push = [&](const Configuration& k, std::string label, std::int64_t min_count) {
      FloorRow row;
      row.r = rec.r;
      row.config = std::move(label);
      row.s = s_exponent(k, p);
      row.min_count = min_count;
      row.r_pow_s = std::pow(rec.r, row.s);
      row.ratio = static_cast<double>(min_count) / row.r_pow_s;
      rows.push_back(std::move(row));
    };
    push(Configuration::zero(ps.num_types()), "0", rec.min_x0);
    for (std::size_t j = 0; j < ps.size(); ++j) push(ps.config(j), ps.config(j).label(), rec.min_counts[j]);
  }
  return rows;
}

}  // namespace grand
