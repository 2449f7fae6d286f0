// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/structure.hh"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trcrp {

std::vector<int> sample_prior_regimes(const ModelView& view, std::span<const std::size_t> members,
                                      double alpha, Rng& rng) {
  const std::size_t p = view.panel.window();
  const RegimeStats empty(members.size(), p);
  std::vector<RegimeStats> stats;
  std::vector<int> regimes;
  std::vector<double> weights;
  const double log_alpha = std::log(alpha);
  for (int t = 1; t <= view.panel.num_steps(); ++t) {
    weights.clear();
    for (const auto& s : stats) {
      weights.push_back(std::log(static_cast<double>(s.count)) + step_cohesion(s, view, members, t));
    }
    weights.push_back(log_alpha + step_cohesion(empty, view, members, t));
    const std::size_t k = sample_log_categorical(weights, rng);
    if (k == stats.size()) stats.push_back(empty);
    incorporate_step(stats[k], view.panel, members, t);
    regimes.push_back(static_cast<int>(k));
  }
  return regimes;
}

namespace {

double single_loglik(const ModelView& view, std::size_t n, std::span<const int> regimes,
                     double alpha) {
  const std::size_t member[] = {n};
  return partial_loglik(view, member, regimes, alpha);
}

std::vector<std::size_t> with_member(std::vector<std::size_t> members, std::size_t n) {
  members.insert(std::upper_bound(members.begin(), members.end(), n), n);
  return members;
}

std::vector<std::size_t> without_member(std::vector<std::size_t> members, std::size_t n) {
  members.erase(std::find(members.begin(), members.end(), n));
  return members;
}

}  // namespace

CProposal c_proposal_weights(const Panel& panel, const ChainState& state, std::size_t n, Rng& rng) {
  const ModelView view = state.view(panel);
  const auto current = static_cast<std::size_t>(state.assignments[n]);
  const GroupModel& own = state.groups[current];
  const bool singleton = own.members().size() == 1;
  CProposal proposal;
  for (std::size_t m = 0; m < state.groups.size(); ++m) {
    const GroupModel& group = state.groups[m];
    const std::size_t size = group.members().size() - (m == current ? 1 : 0);
    if (size == 0) {
      proposal.log_weights.push_back(kNegInf);
      continue;
    }
    proposal.log_weights.push_back(std::log(static_cast<double>(size)) +
                                   single_loglik(view, n, group.regimes(), group.alpha()));
  }
  proposal.fresh_alpha = own.alpha();
  if (singleton) {
    proposal.fresh_regimes.assign(own.regimes().begin(), own.regimes().end());
  } else {
    const std::size_t member[] = {n};
    proposal.fresh_regimes = sample_prior_regimes(view, member, proposal.fresh_alpha, rng);
  }
  proposal.log_weights.push_back(std::log(state.alpha0) +
                                 single_loglik(view, n, proposal.fresh_regimes, proposal.fresh_alpha));
  return proposal;
}

CProposal propose_c(const Panel& panel, const ChainState& state, std::size_t n, Rng& rng) {
  CProposal proposal = c_proposal_weights(panel, state, n, rng);
  proposal.choice = sample_log_categorical(proposal.log_weights, rng);
  return proposal;
}

bool is_identity_move(const ChainState& state, std::size_t n, const CProposal& proposal) {
  const auto current = static_cast<std::size_t>(state.assignments[n]);
  if (proposal.choice == current) return true;
  return proposal.choice == proposal.new_group() && state.groups[current].members().size() == 1;
}

double c_acceptance_log_ratio(const Panel& panel, const ChainState& state, std::size_t n,
                              const CProposal& proposal) {
  if (is_identity_move(state, n, proposal)) return 0.0;
  const ModelView view = state.view(panel);
  const auto current = static_cast<std::size_t>(state.assignments[n]);
  const GroupModel& source = state.groups[current];

  // Source group before and after removing n.
  const double source_before = source.loglik(state.hypers);
  const auto remaining = without_member(source.members(), n);
  const double source_after = partial_loglik(view, remaining, source.regimes(), source.alpha());
  const double source_single = single_loglik(view, n, source.regimes(), source.alpha());

  double target_before = 0.0;
  double target_after;
  double target_single;
  if (proposal.choice == proposal.new_group()) {
    target_single = single_loglik(view, n, proposal.fresh_regimes, proposal.fresh_alpha);
    target_after = target_single;
  } else {
    const GroupModel& target = state.groups[proposal.choice];
    target_before = target.loglik(state.hypers);
    target_after = partial_loglik(view, with_member(target.members(), n), target.regimes(),
                                  target.alpha());
    target_single = single_loglik(view, n, target.regimes(), target.alpha());
  }
  return (target_after + source_after) - (target_before + source_before) +
         (source_single - target_single);
}

void apply_c_move(const Panel& panel, ChainState& state, std::size_t n, const CProposal& proposal) {
  if (is_identity_move(state, n, proposal)) return;
  const auto current = static_cast<std::size_t>(state.assignments[n]);
  std::size_t target = proposal.choice;
  if (target == proposal.new_group()) {
    state.groups.emplace_back(panel, std::vector<std::size_t>{n}, proposal.fresh_alpha,
                              proposal.fresh_regimes);
    target = state.groups.size() - 1;
  } else {
    state.groups[target].set_members(with_member(state.groups[target].members(), n));
  }
  state.assignments[n] = static_cast<int>(target);
  GroupModel& source = state.groups[current];
  if (source.members().size() == 1) {
    state.groups.erase(state.groups.begin() + static_cast<std::ptrdiff_t>(current));
    for (int& c : state.assignments) {
      if (c > static_cast<int>(current)) --c;
    }
  } else {
    source.set_members(without_member(source.members(), n));
  }
  // Keep outer labels in first-appearance order.
  const auto relabeled = canonical_labels(state.assignments);
  if (relabeled != state.assignments) {
    std::vector<GroupModel> groups;
    groups.reserve(state.groups.size());
    std::vector<bool> placed(state.groups.size(), false);
    std::vector<std::size_t> order(state.groups.size());
    for (std::size_t i = 0; i < relabeled.size(); ++i) {
      const auto to = static_cast<std::size_t>(relabeled[i]);
      if (!placed[to]) {
        order[to] = static_cast<std::size_t>(state.assignments[i]);
        placed[to] = true;
      }
    }
    for (std::size_t m : order) groups.push_back(std::move(state.groups[m]));
    state.groups = std::move(groups);
    state.assignments = relabeled;
  }
}

bool accept_c(const Panel& panel, ChainState& state, std::size_t n, const CProposal& proposal,
              bool full_mh) {
  if (is_identity_move(state, n, proposal)) return true;
  if (full_mh) {
    const double log_r = c_acceptance_log_ratio(panel, state, n, proposal);
    if (!(std::log(uniform_open(state.rng)) < log_r)) return false;
  }
  apply_c_move(panel, state, n, proposal);
  return true;
}

SweepStats sweep_c(const Panel& panel, ChainState& state, bool full_mh) {
  SweepStats stats;
  for (std::size_t n = 0; n < state.assignments.size(); ++n) {
    const CProposal proposal = propose_c(panel, state, n, state.rng);
    ++stats.proposals;
    const bool identity = is_identity_move(state, n, proposal);
    if (accept_c(panel, state, n, proposal, full_mh)) {
      if (!identity) ++stats.changes;
    } else {
      ++stats.rejections;
    }
  }
  return stats;
}

}  // namespace trcrp
