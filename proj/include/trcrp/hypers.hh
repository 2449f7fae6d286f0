// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "trcrp/chain.hh"
#include "trcrp/numerics.hh"

namespace trcrp {

inline constexpr std::size_t kGridSize = 30;
inline constexpr double kGridFloor = 1e-6;

// n points geometrically spaced on [lo, hi]. A non-positive lo becomes
// kGridFloor; if hi <= lo the range becomes [lo, 100 lo].
std::vector<double> logspace(double lo, double hi, std::size_t n = kGridSize);
std::vector<double> linspace(double lo, double hi, std::size_t n = kGridSize);

struct HyperGrid {
  std::string rule;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> points;
};

// Grids for one series' Normal-InverseGamma hyperparameters; shared by the
// emission and every lag.
struct SeriesGrids {
  HyperGrid m;
  HyperGrid V;
  HyperGrid a;
  HyperGrid b;

  const HyperGrid& component(int c) const;
};

struct GridSet {
  HyperGrid alpha0;
  HyperGrid alpha;
  std::vector<SeriesGrids> series;
};

GridSet build_grids(const Panel& panel);
nlohmann::json grids_to_json(const Panel& panel, const GridSet& grids);

// Middle grid points for every hyperparameter.
std::vector<SeriesHypers> initial_hypers(const Panel& panel, const GridSet& grids);
double initial_alpha0(const GridSet& grids);
double initial_alpha(const GridSet& grids);

struct HyperId {
  enum class Kind { Alpha0, Alpha, Emission, Lag };
  Kind kind = Kind::Alpha0;
  // Group for Alpha, series for Emission and Lag.
  std::size_t index = 0;
  // Lag i in 1..p for Lag.
  std::size_t lag = 0;
  // 0: m, 1: V, 2: a, 3: b.
  int component = 0;
};

// Instrumentation: predictive evaluations per series made by the
// restricted conditionals.
struct HyperCounters {
  std::vector<std::size_t> emission_evals;
  std::vector<std::size_t> lag_evals;
};

// Grid points of a hyperparameter.
const std::vector<double>& grid_points(const GridSet& grids, const HyperId& id);

// Current value of a hyperparameter and a setter that keeps caches valid.
double hyper_value(const ChainState& state, const HyperId& id);
void set_hyper_value(ChainState& state, const HyperId& id, double value);

// Log conditional (up to a constant) at every grid point, from the terms of
// the log joint that involve the parameter, plus its log prior.
std::vector<double> conditional_log_weights(const Panel& panel, const ChainState& state,
                                            const GridSet& grids, const HyperId& id,
                                            HyperCounters* counters = nullptr);

// Samples the parameter from its grid conditional and stores it.
double gibbs_hyper(const Panel& panel, ChainState& state, const GridSet& grids, const HyperId& id,
                   HyperCounters* counters = nullptr);

// Parameters held at their current values by hyper_sweep.
struct HyperFreeze {
  bool alpha0 = false;
  bool alpha = false;
  bool nig = false;
};

// alpha0, every alpha^m, then per series the emission and lag components.
void hyper_sweep(const Panel& panel, ChainState& state, const GridSet& grids,
                 HyperCounters* counters = nullptr, const HyperFreeze& freeze = {});

}  // namespace trcrp
