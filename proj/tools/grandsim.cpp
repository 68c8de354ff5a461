#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "check_suite.hpp"
#include "grand/config.hpp"
#include "grand/grand.hpp"

namespace {

using namespace grand;

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

int cmd_simulate(const std::string& config, std::uint64_t seed, const std::string& out, std::size_t policy) {
  const auto cfg = load_config(config);
  if (policy >= cfg.policies.size()) throw std::invalid_argument("policy index out of range");
  const auto spec = cfg.run_spec(cfg.single_run_r(), cfg.policies[policy], seed);
  const auto rho = spec.rho();
  const auto lp = solve_lp(cfg.packing, rho);

  CellResult cell;
  cell.policy = policy;
  cell.seed = seed;
  cell.record = simulate(spec);
  cell.objective_gap = objective_gap(cell.record.mean_x, lp.L_star);
  cell.distance = distance_to_optimal_set(cfg.packing, rho, lp, cell.record.mean_x).distance;
  cell.ok = true;

  auto os = open_out(out);
  write_runs_header(os, cfg.packing);
  write_run_row(os, cfg.packing, 0, spec.policy, spec.r, cell);
  return 0;
}

int cmd_lp(const std::string& config) {
  const auto cfg = load_config(config);
  const auto rho = cfg.rho();
  const auto sol = solve_lp(cfg.packing, rho);
  std::cout << "quantity,key,value\n";
  std::cout << "L_star,," << fmt17(sol.L_star) << '\n';
  for (std::size_t j = 0; j < cfg.packing.size(); ++j)
    std::cout << "x_star," << cfg.packing.config(j).label() << ',' << fmt17(sol.x_star[j]) << '\n';
  for (std::size_t i = 0; i < cfg.packing.num_types(); ++i)
    std::cout << "eta," << i + 1 << ',' << fmt17(sol.eta[i]) << '\n';
  for (std::size_t j = 0; j < cfg.packing.size(); ++j) {
    double load = 0.0;
    for (std::size_t i = 0; i < cfg.packing.num_types(); ++i) load += cfg.packing.config(j)[i] * sol.eta[i];
    std::cout << "reduced_cost," << cfg.packing.config(j).label() << ',' << fmt17(1.0 - load) << '\n';
  }
  const bool ok = verify_optimal(cfg.packing, rho, sol.x_star, sol.eta);
  std::cout << "certificate,," << (ok ? "pass" : "fail") << '\n';
  return ok ? 0 : 1;
}

int cmd_cvx(const std::string& config, double a) {
  const auto cfg = load_config(config);
  const auto rho = cfg.rho();
  const auto sol = solve_cvx(cfg.packing, rho, a);
  const LyapunovParams lyp(cfg.packing, a);
  std::cout << "quantity,key,value\n";
  for (std::size_t j = 0; j < cfg.packing.size(); ++j)
    std::cout << "x_star_a," << cfg.packing.config(j).label() << ',' << fmt17(sol.point.x[j]) << '\n';
  for (std::size_t i = 0; i < cfg.packing.num_types(); ++i)
    std::cout << "nu," << i + 1 << ',' << fmt17(sol.point.nu[i]) << '\n';
  std::cout << "lyapunov,," << fmt17(lyapunov_value(lyp, sol.point.x)) << '\n';
  std::cout << "xi_residual,," << fmt17(xi_drift(cfg.packing, lyp, sol.point.x, cfg.mu)) << '\n';
  std::cout << "newton_iterations,," << sol.iterations << '\n';
  return 0;
}

int cmd_check(const std::string& config) {
  const auto cfg = load_config(config);
  return tools::print_checks(std::cout, tools::run_checks(cfg)) ? 0 : 1;
}

int cmd_sweep(const std::string& config, const std::string& out_dir, bool large, unsigned threads, bool threads_set) {
  const auto cfg = load_config(config);
  auto spec = cfg.sweep_spec();
  if (large && spec.r_grid.back() < 1e5) spec.r_grid.push_back(1e5);
  if (threads_set) spec.threads = threads;
  const auto res = run_sweep(spec);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    auto os = open_out(dir / "runs.csv");
    write_runs_csv(os, spec, res);
  }
  {
    auto os = open_out(dir / "report.csv");
    write_report_csv(os, spec, res.report);
  }
  {
    auto os = open_out(dir / "verdicts.txt");
    write_verdicts(os, spec, res.report);
  }
  write_verdicts(std::cout, spec, res.report);
  std::size_t failed = 0;
  for (const auto& c : res.runs) failed += c.ok ? 0 : 1;
  if (failed) std::cerr << failed << " cell(s) failed; see runs.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRAND placement simulator and fluid-model toolkit"};
  app.require_subcommand(1);

  std::string config, out, out_dir;
  std::uint64_t seed = 0;
  std::size_t policy = 0;
  double a = 0.1;
  bool large = false;
  unsigned threads = 0;

  auto* sim = app.add_subcommand("simulate", "single run; writes one CSV row");
  sim->add_option("--config", config, "run config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "RNG seed")->required();
  sim->add_option("--out", out, "output CSV")->required();
  sim->add_option("--policy-index", policy, "which configured policy to run");

  auto* lp = app.add_subcommand("lp", "fluid LP optimum, duals and certificate");
  lp->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* cvx = app.add_subcommand("cvx", "minimiser of the Lyapunov function for a given a");
  cvx->add_option("--config", config)->required()->check(CLI::ExistingFile);
  cvx->add_option("--a", a, "Lyapunov parameter in (0, 1)")->required();

  auto* check = app.add_subcommand("check", "invariant suite");
  check->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "sweep over r and policies");
  sweep->add_option("--config", config)->required()->check(CLI::ExistingFile);
  sweep->add_option("--out-dir", out_dir)->required();
  sweep->add_flag("--large", large, "append r = 1e5 to the grid");
  auto* threads_opt = sweep->add_option("--threads", threads, "worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(config, seed, out, policy);
    if (*lp) return cmd_lp(config);
    if (*cvx) return cmd_cvx(config, a);
    if (*check) return cmd_check(config);
    if (*sweep) return cmd_sweep(config, out_dir, large, threads, threads_opt->count() > 0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
