// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <vector>

#include "trcrp/chain.hh"
#include "trcrp/mcmc.hh"
#include "trcrp/model.hh"
#include "trcrp/numerics.hh"

namespace trcrp {

// Draws z_{1:T} sequentially from the lag-reweighted CRP of the given series,
// with no emission term.
std::vector<int> sample_prior_regimes(const ModelView& view, std::span<const std::size_t> members,
                                      double alpha, Rng& rng);

struct CProposal {
  // One weight per existing group, then the new singleton group.
  std::vector<double> log_weights;
  // Regime sequence and concentration used for the new singleton group.
  std::vector<int> fresh_regimes;
  double fresh_alpha = 1.0;
  std::size_t choice = 0;

  std::size_t new_group() const { return log_weights.size() - 1; }
};

// Proposal weights for series n. The fresh sequence is forward sampled when
// n shares its group, otherwise n's current sequence is reused.
CProposal c_proposal_weights(const Panel& panel, const ChainState& state, std::size_t n, Rng& rng);

// Weights plus a draw of c'.
CProposal propose_c(const Panel& panel, const ChainState& state, std::size_t n, Rng& rng);

// True when the proposal leaves the state unchanged (c' = c^n, or the reused
// singleton).
bool is_identity_move(const ChainState& state, std::size_t n, const CProposal& proposal);

// log r(c^n -> c') with L(z, empty set) taken as 0.
double c_acceptance_log_ratio(const Panel& panel, const ChainState& state, std::size_t n,
                              const CProposal& proposal);

// Moves n into proposal.choice, opening or deleting groups as needed.
void apply_c_move(const Panel& panel, ChainState& state, std::size_t n, const CProposal& proposal);

// MH step (or unconditional acceptance when full_mh is false).
bool accept_c(const Panel& panel, ChainState& state, std::size_t n, const CProposal& proposal,
              bool full_mh);

SweepStats sweep_c(const Panel& panel, ChainState& state, bool full_mh);

}  // namespace trcrp
