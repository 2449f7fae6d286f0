// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <vector>

#include "trcrp/model.hh"
#include "trcrp/numerics.hh"

namespace trcrp {

struct MhConfig {
  // false: accept every proposal (initialization heuristic).
  bool full_mh = true;
  int sweeps = 1;
  // Visit t in a random order instead of 1..T.
  bool shuffle = false;
};

struct SweepStats {
  std::size_t proposals = 0;
  std::size_t changes = 0;
  std::size_t rejections = 0;

  SweepStats& operator+=(const SweepStats& other) {
    proposals += other.proposals;
    changes += other.changes;
    rejections += other.rejections;
    return *this;
  }
};

// Proposal log weights for an unassigned step t: log n_k + cohesion +
// observed emission for k < num_regimes(), then log alpha with empty stats.
std::vector<double> proposal_log_weights(const ModelView& view, const GroupModel& group, int t);

struct ZProposal {
  std::size_t label;
  double log_prob;
};

// Draws a label for unassigned step t; label == num_regimes() is a new regime.
ZProposal propose_z(const ModelView& view, const GroupModel& group, int t, Rng& rng);

// sum_{s>t} [log b_s(z_t = to) - log b_s(z_t = from)] with step t unassigned
// in `group`. Labels refer to the unassigned group; num_regimes() is the
// new regime.
double acceptance_log_ratio(const ModelView& view, const GroupModel& group, int t,
                            std::size_t from, std::size_t to);

// One (or config.sweeps) pass of single-site updates over z_{1:T}.
SweepStats sweep_z(const ModelView& view, GroupModel& group, const MhConfig& config, Rng& rng);

}  // namespace trcrp
