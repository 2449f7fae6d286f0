// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/mcmc.hh"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace trcrp {

std::vector<double> proposal_log_weights(const ModelView& view, const GroupModel& group, int t) {
  const auto& members = group.members();
  std::vector<double> weights;
  weights.reserve(group.num_regimes() + 1);
  for (std::size_t k = 0; k < group.num_regimes(); ++k) {
    const RegimeStats& stats = group.stats(k);
    weights.push_back(std::log(static_cast<double>(stats.count)) +
                      step_cohesion(stats, view, members, t) +
                      step_emission(stats, view, members, t));
  }
  const RegimeStats empty(members.size(), view.panel.window());
  weights.push_back(std::log(group.alpha()) + step_cohesion(empty, view, members, t) +
                    step_emission(empty, view, members, t));
  return weights;
}

ZProposal propose_z(const ModelView& view, const GroupModel& group, int t, Rng& rng) {
  const auto weights = proposal_log_weights(view, group, t);
  const std::size_t k = sample_log_categorical(weights, rng);
  return ZProposal{k, weights[k] - logsumexp(weights)};
}

double acceptance_log_ratio(const ModelView& view, const GroupModel& group, int t,
                            std::size_t from, std::size_t to) {
  const int T = group.num_steps();
  if (from == to || t >= T) return 0.0;
  const auto& members = group.members();
  const std::size_t p = view.panel.window();
  const std::size_t K = group.num_regimes();
  if (from > K || to > K) throw std::out_of_range("regime label out of range");

  // prefix[K] stands for the regime step t would open on its own; no other
  // step belongs to it.
  std::vector<RegimeStats> prefix(K + 1, RegimeStats(members.size(), p));
  RegimeStats from_plus(members.size(), p);
  RegimeStats to_plus(members.size(), p);
  incorporate_step(from_plus, view.panel, members, t);
  incorporate_step(to_plus, view.panel, members, t);
  const RegimeStats empty(members.size(), p);
  const double log_alpha = std::log(group.alpha());

  auto term = [&](const RegimeStats& stats, int s) {
    if (stats.count == 0) return kNegInf;
    return std::log(static_cast<double>(stats.count)) + step_cohesion(stats, view, members, s);
  };

  double acc = 0.0;
  std::vector<double> weights;
  for (int s = 1; s <= T; ++s) {
    if (s > t) {
      weights.clear();
      weights.push_back(log_alpha + step_cohesion(empty, view, members, s));
      for (std::size_t l = 0; l <= K; ++l) {
        if (l == from || l == to || prefix[l].count == 0) continue;
        weights.push_back(term(prefix[l], s));
      }
      weights.push_back(term(from_plus, s));
      weights.push_back(term(prefix[to], s));
      const double lse_old = logsumexp(weights);
      weights[weights.size() - 2] = term(prefix[from], s);
      weights[weights.size() - 1] = term(to_plus, s);
      acc += lse_old - logsumexp(weights);
    }
    if (s == t) continue;
    const auto k = static_cast<std::size_t>(group.regime(s));
    incorporate_step(prefix[k], view.panel, members, s);
    if (k == from) incorporate_step(from_plus, view.panel, members, s);
    if (k == to) incorporate_step(to_plus, view.panel, members, s);
  }
  return acc;
}

SweepStats sweep_z(const ModelView& view, GroupModel& group, const MhConfig& config, Rng& rng) {
  if (config.sweeps < 1) throw std::invalid_argument("sweeps must be positive");
  SweepStats stats;
  std::vector<int> order(static_cast<std::size_t>(group.num_steps()));
  for (int pass = 0; pass < config.sweeps; ++pass) {
    std::iota(order.begin(), order.end(), 1);
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
      }
    }
    for (int t : order) {
      const auto old_label = static_cast<std::size_t>(group.regime(t));
      const bool singleton = group.count(old_label) == 1;
      group.unassign(t);
      const std::size_t from = singleton ? group.num_regimes() : old_label;
      const ZProposal proposal = propose_z(view, group, t, rng);
      std::size_t chosen = proposal.label;
      ++stats.proposals;
      if (config.full_mh && proposal.label != from) {
        const double log_r = acceptance_log_ratio(view, group, t, from, proposal.label);
        if (!(std::log(uniform_open(rng)) < log_r)) {
          chosen = from;
          ++stats.rejections;
        }
      }
      if (chosen != from) ++stats.changes;
      group.assign(t, chosen);
    }
  }
  return stats;
}

}  // namespace trcrp
