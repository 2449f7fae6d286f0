// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "trcrp/model.hh"
#include "trcrp/numerics.hh"

namespace trcrp {

// One full latent configuration of the hierarchical model: outer partition
// c^{1:N} with concentration alpha0, one GroupModel per outer cluster, the
// per-series hyperparameters and the chain's generator.
struct ChainState {
  double alpha0 = 1.0;
  std::vector<int> assignments;
  std::vector<GroupModel> groups;
  std::vector<SeriesHypers> hypers;
  Rng rng;

  ModelView view(const Panel& panel) const { return ModelView{panel, hypers}; }
  std::vector<std::size_t> group_sizes() const;
};

// log CRP(c | alpha0) of the outer partition.
double outer_crp_log_mass(const ChainState& state);

// Collapsed log joint: Gamma(1,1) priors on alpha0 and every alpha^m, the
// outer CRP mass and sum_m L^m. Hyperpriors are uniform on their grids and
// contribute a constant, omitted here. Uses the per-group caches.
double log_joint(const Panel& panel, const ChainState& state);

// Same quantity recomputed without touching any cache.
double log_joint_fresh(const Panel& panel, const ChainState& state);

// Largest stats discrepancy over all groups (see GroupModel::max_stats_error).
double max_stats_error(const ChainState& state);

// Throws std::logic_error if the outer partition and group membership
// disagree or labels are not contiguous.
void check_partition(const ChainState& state);

// Versioned checkpoint encoding. Statistics are rebuilt on load; the
// generator state is stored verbatim so a resumed chain is bit-exact.
inline constexpr int kChainSchemaVersion = 1;
nlohmann::json chain_to_json(const ChainState& state);
ChainState chain_from_json(const nlohmann::json& j, const Panel& panel);

std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& text);

}  // namespace trcrp
