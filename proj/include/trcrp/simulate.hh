// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "trcrp/chain.hh"
#include "trcrp/model.hh"
#include "trcrp/panel.hh"

namespace trcrp {

struct SimulationConfig {
  std::size_t num_series = 1;
  int num_steps = 1;
  std::size_t window = 0;
  // One entry per series; empty means default hypers everywhere.
  std::vector<SeriesHypers> hypers;
  // Fixed concentrations; drawn from Gamma(1,1) when absent.
  std::optional<double> alpha;
  std::optional<double> alpha0;
  bool hierarchical = false;
  // Planted outer partition; drawn from CRP(alpha0) (or a single group)
  // when empty.
  std::vector<int> assignments;
  // p values per series, oldest first; drawn from the emission prior
  // predictive when empty.
  std::vector<std::vector<double>> prefix;
  std::uint64_t seed = 0;
};

struct Simulation {
  Panel panel;
  double alpha0;
  std::vector<int> assignments;
  std::vector<double> alphas;
  std::vector<std::vector<int>> regimes;
  std::vector<SeriesHypers> hypers;
};

SeriesHypers default_hypers(std::size_t window);

// Forward simulation of the hierarchical TRCRP mixture with emission
// parameters collapsed. Deterministic given config.seed.
Simulation simulate(const SimulationConfig& config);

// Latent state of a simulation as a chain over sim.panel (which must outlive
// the returned state).
ChainState latent_state(const Simulation& sim);

nlohmann::json latent_to_json(const Simulation& sim);

}  // namespace trcrp
