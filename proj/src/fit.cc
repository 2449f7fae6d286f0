// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/fit.hh"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "trcrp/errors.hh"
#include "trcrp/smc.hh"
#include "trcrp/structure.hh"

namespace trcrp {

void RunConfig::validate() const {
  if (chains < 1) throw UsageError("--chains must be at least 1");
  if (sweeps < 1) throw UsageError("--sweeps must be at least 1");
  if (burnin < 0) throw UsageError("--burnin must be non-negative");
  if (particles < 1) throw UsageError("--particles must be at least 1");
  if (heuristic_sweeps < 0) throw UsageError("heuristic sweeps must be non-negative");
  if (hyper_cadence < 0) throw UsageError("hyper cadence must be non-negative");
  if (!(ess_threshold >= 0 && ess_threshold <= 1)) throw UsageError("ESS threshold must be in [0, 1]");
  if (alpha && !(*alpha > 0)) throw UsageError("alpha must be positive");
  if (alpha0 && !(*alpha0 > 0)) throw UsageError("alpha0 must be positive");
  if (nig && !nig->valid()) throw UsageError("fixed hypers need V, a, b > 0");
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j = {{"window", config.window},
                      {"chains", config.chains},
                      {"sweeps", config.sweeps},
                      {"burnin", config.burnin},
                      {"particles", config.particles},
                      {"seed", config.seed},
                      {"hierarchical", config.hierarchical},
                      {"smc_init", config.smc_init},
                      {"full_mh", config.full_mh},
                      {"heuristic_sweeps", config.heuristic_sweeps},
                      {"hyper_cadence", config.hyper_cadence},
                      {"ess_threshold", config.ess_threshold},
                      {"shuffle", config.shuffle}};
  j["alpha"] = config.alpha ? nlohmann::json(*config.alpha) : nlohmann::json(nullptr);
  j["alpha0"] = config.alpha0 ? nlohmann::json(*config.alpha0) : nlohmann::json(nullptr);
  if (config.nig) {
    j["nig"] = {{"m", config.nig->m}, {"V", config.nig->V}, {"a", config.nig->a}, {"b", config.nig->b}};
  } else {
    j["nig"] = nullptr;
  }
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config, const Panel& panel) {
  return fnv1a_hex(config_to_json(config).dump() + panel_to_json(panel).dump());
}

namespace {

std::string schedule_text(const RunConfig& config) {
  std::string s = config.smc_init ? "smc-init" : "prior-init";
  s += ";heuristic=" + std::to_string(config.heuristic_sweeps);
  s += config.full_mh ? ";full-mh" : ";heuristic-only";
  s += ";hyper-cadence=" + std::to_string(config.hyper_cadence);
  if (config.hierarchical) s += ";hierarchical";
  return s;
}

std::vector<int> draw_outer_crp(std::size_t n, double alpha0, Rng& rng) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(sample_log_categorical(crp_log_weights(labels, alpha0), rng)));
  }
  return labels;
}

HyperFreeze freeze_of(const RunConfig& config) {
  return HyperFreeze{config.alpha0.has_value(), config.alpha.has_value(), config.nig.has_value()};
}

}  // namespace

ChainState init_chain(const Panel& panel, const RunConfig& config, const GridSet& grids,
                      std::uint64_t stream, ChainDiagnostics* diagnostics) {
  if (panel.window() != config.window) throw UsageError("panel window does not match the config");
  ChainState state;
  state.rng = make_rng(config.seed, stream);
  state.alpha0 = config.alpha0 ? *config.alpha0 : initial_alpha0(grids);
  if (config.nig) {
    state.hypers.assign(panel.num_series(),
                        SeriesHypers{*config.nig, std::vector<NigHyper>(panel.window(), *config.nig)});
  } else {
    state.hypers = initial_hypers(panel, grids);
  }
  const std::size_t N = panel.num_series();
  state.assignments = config.hierarchical ? draw_outer_crp(N, state.alpha0, state.rng)
                                          : std::vector<int>(N, 0);
  const double alpha = config.alpha ? *config.alpha : initial_alpha(grids);
  const ModelView view = state.view(panel);
  int num_groups = 0;
  for (int c : state.assignments) num_groups = std::max(num_groups, c + 1);
  for (int m = 0; m < num_groups; ++m) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < N; ++n) {
      if (state.assignments[n] == m) members.push_back(n);
    }
    std::vector<int> regimes;
    if (config.smc_init) {
      const SmcConfig smc{config.particles, config.ess_threshold};
      SmcResult res = smc_block_sample(view, members, alpha, smc, state.rng);
      if (diagnostics) diagnostics->smc_resamples += res.resamples;
      regimes = std::move(res.regimes);
    } else {
      regimes = sample_prior_regimes(view, members, alpha, state.rng);
    }
    state.groups.emplace_back(panel, std::move(members), alpha, std::move(regimes));
  }
  return state;
}

void transition(const Panel& panel, const RunConfig& config, const GridSet& grids, ChainState& state,
                int iteration, ChainDiagnostics* diagnostics) {
  const bool heuristic = !config.full_mh || iteration < config.heuristic_sweeps;
  const MhConfig mh{!heuristic, 1, config.shuffle};
  const ModelView view = state.view(panel);
  for (auto& group : state.groups) {
    const SweepStats s = sweep_z(view, group, mh, state.rng);
    if (diagnostics) diagnostics->z_stats += s;
  }
  if (config.hierarchical && panel.num_series() > 1) {
    const SweepStats s = sweep_c(panel, state, !heuristic);
    if (diagnostics) diagnostics->c_stats += s;
  }
  if (config.hyper_cadence > 0 && (iteration + 1) % config.hyper_cadence == 0) {
    hyper_sweep(panel, state, grids, nullptr, freeze_of(config));
  }
}

ChainState run_chain(const Panel& panel, const RunConfig& config, const GridSet& grids,
                     std::uint64_t stream, ChainDiagnostics* diagnostics) {
  ChainState state = init_chain(panel, config, grids, stream, diagnostics);
  const int total = config.burnin + config.sweeps;
  for (int it = 0; it < total; ++it) {
    transition(panel, config, grids, state, it, diagnostics);
    const double lj = log_joint(panel, state);
    if (diagnostics) diagnostics->log_joint.push_back(lj);
    if (!std::isfinite(lj)) {
      throw NumericalError("non-finite log joint in chain " + std::to_string(stream) +
                           " at iteration " + std::to_string(it) + "\n" +
                           chain_to_json(state).dump());
    }
  }
  return state;
}

FitResult fit(std::shared_ptr<const Panel> panel, const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const GridSet grids = build_grids(*panel);
  const std::size_t S = config.chains;
  std::vector<std::optional<ChainState>> states(S);
  std::vector<ChainDiagnostics> diagnostics(S);
  std::vector<std::exception_ptr> errors(S);

  auto work = [&](std::size_t s) {
    try {
      states[s] = run_chain(*panel, config, grids, s, &diagnostics[s]);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  if (config.deterministic) workers = 1;
  workers = std::min(workers, S);
  if (workers <= 1) {
    for (std::size_t s = 0; s < S; ++s) work(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < S; s = next++) work(s);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  FitResult result;
  result.samples.panel = panel;
  result.samples.config = config_to_json(config);
  result.samples.config_hash = config_hash(config, *panel);
  for (std::size_t s = 0; s < S; ++s) {
    result.samples.chains.push_back(std::move(*states[s]));
    result.samples.records.push_back(
        ChainRecord{config.seed, s, config.burnin, config.sweeps, schedule_text(config)});
  }
  result.diagnostics = std::move(diagnostics);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

nlohmann::json provenance_json(const FitResult& result, const RunConfig& config) {
  nlohmann::json chains = nlohmann::json::array();
  for (std::size_t s = 0; s < result.diagnostics.size(); ++s) {
    const auto& d = result.diagnostics[s];
    auto rate = [](const SweepStats& st) {
      return st.proposals ? static_cast<double>(st.proposals - st.rejections) /
                                static_cast<double>(st.proposals)
                          : 1.0;
    };
    chains.push_back({{"stream", s},
                      {"z_acceptance", rate(d.z_stats)},
                      {"z_changes", d.z_stats.changes},
                      {"c_acceptance", rate(d.c_stats)},
                      {"c_changes", d.c_stats.changes},
                      {"smc_resamples", d.smc_resamples},
                      {"log_joint", d.log_joint}});
  }
  return {{"config_hash", result.samples.config_hash},
          {"seed", config.seed},
          {"threads", config.threads},
          {"deterministic", config.deterministic},
          {"wall_seconds", result.wall_seconds},
          {"chains", chains}};
}

}  // namespace trcrp
