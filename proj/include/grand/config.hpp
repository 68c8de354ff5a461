#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "grand/engine.hpp"
#include "grand/harness.hpp"
#include "grand/packing.hpp"
#include "grand/policy.hpp"

namespace grand {

struct SweepSettings {
  std::vector<double> r_grid{100.0, 1000.0, 10000.0};
  int replicas = 8;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::optional<double> warmup_time;
  std::optional<double> measure_time;
  StartMode start = StartMode::Stationary;
  int batches = 20;
  double distance_tol = 1e-7;
};

/// Contents of a run configuration file.
///
///   [packing]   explicit = [[2], ...]  or  vector = { sizes = [...], capacity = [...] }
///   [rates]     lambda = [...], mu = [...]
///   [policy]    policy = "grand-zp", p = ...   (or [[policy]] for several)
///   [sweep]     r_grid, replicas, seed, threads, warmup_time, measure_time, start, batches
///   [run]       r (scale for a single simulate run; defaults to the first grid point)
///   [diagnostics] epsilon, s, c
struct Config {
  PackingSet packing;
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<Policy> policies;
  DiagnosticParams diagnostics;
  SweepSettings sweep;
  std::optional<double> run_r;

  /// Run template at scale r with the given policy and seed.
  [[nodiscard]] RunSpec run_spec(double r, const Policy& pol, std::uint64_t seed) const {
    RunSpec rs(packing, lambda, mu, r, pol, seed);
    rs.diagnostics = diagnostics;
    rs.start = sweep.start;
    rs.batches = sweep.batches;
    if (sweep.warmup_time) rs.warmup_time = *sweep.warmup_time;
    if (sweep.measure_time) rs.measure_time = *sweep.measure_time;
    return rs;
  }

  [[nodiscard]] double single_run_r() const { return run_r.value_or(sweep.r_grid.front()); }

  [[nodiscard]] SweepSpec sweep_spec() const {
    SweepSpec spec(run_spec(sweep.r_grid.front(), policies.front(), 0));
    spec.r_grid = sweep.r_grid;
    spec.policies = policies;
    spec.replicas = sweep.replicas;
    spec.root_seed = sweep.seed;
    spec.threads = sweep.threads;
    spec.distance_tol = sweep.distance_tol;
    return spec;
  }

  /// Normalised rho (sum_i rho_i = 1).
  [[nodiscard]] std::vector<double> rho() const { return run_spec(single_run_r(), policies.front(), 0).rho(); }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw std::invalid_argument("config: " + what); }

inline double as_real(const toml::node& n, std::string_view key) {
  if (auto v = n.value<double>()) return *v;
  config_error(std::string(key) + " must be a number");
}

inline std::vector<double> real_list(const toml::node* n, std::string_view key) {
  if (!n) config_error(std::string(key) + " is missing");
  if (const auto* arr = n->as_array()) {
    std::vector<double> out;
    for (const auto& el : *arr) out.push_back(as_real(el, key));
    return out;
  }
  return {as_real(*n, key)};
}

inline Policy parse_policy(const toml::table& t) {
  const auto name = t["policy"].value<std::string>();
  if (!name) config_error("policy entry needs policy = \"grand-zp\" or \"grand-az\"");
  if (*name == "grand-zp") {
    const auto p = t["p"].value<double>();
    if (!p) config_error("grand-zp needs p");
    return Policy(GrandZp{*p});
  }
  if (*name == "grand-az") {
    const auto a = t["a"].value<double>();
    if (!a) config_error("grand-az needs a");
    return Policy(GrandAZ{*a});
  }
  config_error("unknown policy \"" + *name + "\"");
}

inline PackingSet parse_packing(const toml::table& root) {
  const auto* sec = root["packing"].as_table();
  if (!sec) config_error("[packing] section is missing");
  const auto* expl = sec->get("explicit");
  const auto* vec = sec->get("vector");
  if ((expl != nullptr) == (vec != nullptr)) config_error("[packing] needs exactly one of explicit or vector");
  if (expl) {
    const auto* arr = expl->as_array();
    if (!arr || arr->empty()) config_error("packing.explicit must be a non-empty list of configurations");
    std::vector<Configuration> configs;
    std::size_t types = 0;
    for (const auto& el : *arr) {
      const auto* row = el.as_array();
      if (!row) config_error("each explicit configuration must be a list of counts");
      std::vector<int> counts;
      for (const auto& c : *row) {
        const auto v = c.value<std::int64_t>();
        if (!v) config_error("configuration counts must be integers");
        counts.push_back(static_cast<int>(*v));
      }
      if (types == 0) types = counts.size();
      configs.emplace_back(std::move(counts));
    }
    return PackingSet::build_explicit(types, configs);
  }
  const auto* t = vec->as_table();
  if (!t) config_error("packing.vector must be a table { sizes, capacity }");
  const auto capacity = real_list(t->get("capacity"), "capacity");
  const auto* sizes_node = t->get("sizes");
  if (!sizes_node || !sizes_node->as_array()) config_error("packing.vector.sizes must be a list");
  std::vector<std::vector<double>> sizes;
  for (const auto& el : *sizes_node->as_array()) sizes.push_back(real_list(&el, "sizes"));
  return PackingSet::build_vector_packing(sizes, capacity);
}

inline StartMode parse_start(std::string_view s) {
  if (s == "stationary") return StartMode::Stationary;
  if (s == "empty") return StartMode::Empty;
  config_error("start must be \"stationary\" or \"empty\"");
}

}  // namespace detail

inline Config parse_config(const toml::table& root) {
  using detail::config_error;
  Config cfg;
  cfg.packing = detail::parse_packing(root);

  const auto* rates = root["rates"].as_table();
  if (!rates) config_error("[rates] section is missing");
  cfg.lambda = detail::real_list(rates->get("lambda"), "lambda");
  cfg.mu = rates->contains("mu") ? detail::real_list(rates->get("mu"), "mu")
                                 : std::vector<double>(cfg.packing.num_types(), 1.0);

  const auto* pol = root.get("policy");
  if (!pol) config_error("[policy] section is missing");
  if (const auto* t = pol->as_table()) {
    cfg.policies.push_back(detail::parse_policy(*t));
  } else if (const auto* arr = pol->as_array()) {
    for (const auto& el : *arr) {
      const auto* t2 = el.as_table();
      if (!t2) config_error("[[policy]] entries must be tables");
      cfg.policies.push_back(detail::parse_policy(*t2));
    }
  }
  if (cfg.policies.empty()) config_error("no policy given");

  if (const auto* sw = root["sweep"].as_table()) {
    auto& s = cfg.sweep;
    if (sw->contains("r_grid")) s.r_grid = detail::real_list(sw->get("r_grid"), "r_grid");
    if (auto v = (*sw)["replicas"].value<std::int64_t>()) s.replicas = static_cast<int>(*v);
    if (auto v = (*sw)["seed"].value<std::int64_t>()) s.seed = static_cast<std::uint64_t>(*v);
    if (auto v = (*sw)["threads"].value<std::int64_t>()) s.threads = static_cast<unsigned>(*v);
    if (auto v = (*sw)["warmup_time"].value<double>()) s.warmup_time = *v;
    if (auto v = (*sw)["measure_time"].value<double>()) s.measure_time = *v;
    if (auto v = (*sw)["batches"].value<std::int64_t>()) s.batches = static_cast<int>(*v);
    if (auto v = (*sw)["distance_tol"].value<double>()) s.distance_tol = *v;
    if (auto v = (*sw)["start"].value<std::string>()) s.start = detail::parse_start(*v);
  }
  if (const auto* run = root["run"].as_table())
    if (auto v = (*run)["r"].value<double>()) cfg.run_r = *v;
  if (const auto* d = root["diagnostics"].as_table()) {
    if (auto v = (*d)["epsilon"].value<double>()) cfg.diagnostics.epsilon = *v;
    if (auto v = (*d)["s"].value<double>()) cfg.diagnostics.s = *v;
    if (auto v = (*d)["c"].value<double>()) cfg.diagnostics.c = *v;
  }
  // Validates rates and policy parameters eagerly.
  (void)cfg.run_spec(cfg.single_run_r(), cfg.policies.front(), 0);
  return cfg;
}

inline Config parse_config_string(std::string_view text) {
  try {
    return parse_config(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument("config: " + std::string(e.description()));
  }
}

inline Config load_config(const std::string& path) {
  try {
    return parse_config(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + std::string(e.description()));
  }
}

}  // namespace grand
