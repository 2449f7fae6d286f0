// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trcrp/chain.hh"
#include "trcrp/hypers.hh"
#include "trcrp/mcmc.hh"
#include "trcrp/predict.hh"

namespace trcrp {

struct RunConfig {
  std::size_t window = 10;
  std::size_t chains = 64;
  int sweeps = 1;
  int burnin = 5000;
  std::size_t particles = 64;
  std::uint64_t seed = 0;
  // 0: one worker per hardware thread.
  std::size_t threads = 0;
  bool deterministic = false;
  bool hierarchical = false;

  bool smc_init = true;
  bool full_mh = true;
  // Leading iterations that accept every proposal.
  int heuristic_sweeps = 10;
  // Hyper sweep every this many iterations; 0 keeps hypers fixed.
  int hyper_cadence = 1;
  double ess_threshold = 0.5;
  bool shuffle = false;

  std::optional<double> alpha;
  std::optional<double> alpha0;
  std::optional<NigHyper> nig;

  void validate() const;
};

// Canonical JSON of every field that affects sampling (threads and the
// deterministic flag excluded).
nlohmann::json config_to_json(const RunConfig& config);

std::string fnv1a_hex(const std::string& text);
std::string config_hash(const RunConfig& config, const Panel& panel);

struct ChainDiagnostics {
  std::vector<double> log_joint;
  SweepStats z_stats;
  SweepStats c_stats;
  std::size_t smc_resamples = 0;
};

// Initial state of chain `stream`: c from the outer CRP (or one group), each
// group's z from SMC (or the lag-reweighted prior), hypers at grid middles
// unless fixed by the config.
ChainState init_chain(const Panel& panel, const RunConfig& config, const GridSet& grids,
                      std::uint64_t stream, ChainDiagnostics* diagnostics = nullptr);

// One iteration: z sweeps per group, then c (hierarchical, N > 1), then the
// hyper sweep when due. `iteration` counts from 0.
void transition(const Panel& panel, const RunConfig& config, const GridSet& grids, ChainState& state,
                int iteration, ChainDiagnostics* diagnostics = nullptr);

// Runs burnin + sweeps iterations and returns the final state. Throws
// NumericalError on a non-finite log joint.
ChainState run_chain(const Panel& panel, const RunConfig& config, const GridSet& grids,
                     std::uint64_t stream, ChainDiagnostics* diagnostics = nullptr);

struct FitResult {
  SampleSet samples;
  std::vector<ChainDiagnostics> diagnostics;
  double wall_seconds = 0.0;
};

// Runs config.chains chains (in parallel unless deterministic). Output does
// not depend on the thread count.
FitResult fit(std::shared_ptr<const Panel> panel, const RunConfig& config);

nlohmann::json provenance_json(const FitResult& result, const RunConfig& config);

}  // namespace trcrp
