// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <cmath>
#include <map>

#include "oracle.hh"
#include "synthetic.hh"
#include "trcrp/chain.hh"
#include "trcrp/mcmc.hh"

using trcrp::GroupModel;
using trcrp::ModelView;
using trcrp::NigHyper;
using trcrp::Panel;
using trcrp::SeriesHypers;

namespace {

std::vector<SeriesHypers> hypers_for(const Panel& panel, NigHyper h = NigHyper{0.0, 1.0, 1.5, 1.0}) {
  return std::vector<SeriesHypers>(panel.num_series(),
                                   SeriesHypers{h, std::vector<NigHyper>(panel.window(), h)});
}

std::vector<std::size_t> all_series(const Panel& panel) {
  std::vector<std::size_t> members(panel.num_series());
  for (std::size_t n = 0; n < members.size(); ++n) members[n] = n;
  return members;
}

// Proposal weights written directly: statistics of regime k over every step
// other than t.
std::vector<oracle::Real> direct_proposal(const Panel& panel, const std::vector<SeriesHypers>& hypers,
                                          const std::vector<int>& z, int t, double alpha) {
  const int T = static_cast<int>(z.size());
  const int p = static_cast<int>(panel.window());
  int K = 0;
  for (int s = 1; s <= T; ++s) {
    if (s != t) K = std::max(K, z[s - 1] + 1);
  }
  std::vector<oracle::Real> w;
  for (int k = 0; k <= K; ++k) {
    int count = 0;
    for (int s = 1; s <= T; ++s) count += s != t && z[s - 1] == k;
    oracle::Real acc = k < K ? std::log(static_cast<oracle::Real>(count)) : std::log(static_cast<oracle::Real>(alpha));
    for (std::size_t n = 0; n < panel.num_series(); ++n) {
      for (int i = 0; i <= p; ++i) {
        if (!panel.observed(n, t - i)) continue;
        std::vector<oracle::Real> xs;
        for (int s = 1; s <= T; ++s) {
          if (s != t && k < K && z[s - 1] == k && panel.observed(n, s - i)) xs.push_back(panel.value(n, s - i));
        }
        const NigHyper& h = i == 0 ? hypers[n].emission : hypers[n].lags[i - 1];
        acc += oracle::predictive_logpdf(h, xs, panel.value(n, t - i));
      }
    }
    w.push_back(acc);
  }
  return w;
}

}  // namespace

TEST_CASE("a single step always proposes the first regime") {
  const Panel panel = synth::make_panel({{0.5, 1.0}}, 1);
  const auto hypers = hypers_for(panel);
  GroupModel group(panel, {0}, 1.0, {0});
  group.unassign(1);
  trcrp::Rng rng = trcrp::make_rng(1, 0);
  const auto proposal = trcrp::propose_z(ModelView{panel, hypers}, group, 1, rng);
  CHECK(proposal.label == 0);
  CHECK(proposal.log_prob == 0.0);
}

TEST_CASE("identical regimes get identical proposal weights") {
  // Steps 1 and 3 sit in different regimes with equal lag and value.
  const Panel panel = synth::make_panel({{1.0, 2.0, 1.0, 2.0, 1.5}}, 1);
  const auto hypers = hypers_for(panel);
  GroupModel group(panel, {0}, 1.0, {0, 2, 1, 2});
  group.unassign(2);
  const auto w = trcrp::proposal_log_weights(ModelView{panel, hypers}, group, 2);
  // Steps 1, 4 and 3 keep labels 0, 1 and 2.
  REQUIRE(group.regime(3) == 2);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == doctest::Approx(w[2]).epsilon(1e-14));
}

TEST_CASE("proposal distribution against direct evaluation") {
  trcrp::Rng rng = trcrp::make_rng(2, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const Panel panel = synth::random_panel(rng, 1 + trial % 3, 9, trial % 3, 0.15);
    const auto hypers = hypers_for(panel, NigHyper{0.1, 2.0, 1.2, 0.8});
    const auto z = trcrp::canonical_labels(synth::markov_regimes(rng, 9, 3, 0.5));
    const int t = 1 + trial % 9;
    GroupModel group(panel, all_series(panel), 0.7, z);
    group.unassign(t);
    const auto got = trcrp::normalize_log_weights(trcrp::proposal_log_weights(ModelView{panel, hypers}, group, t));
    // Compare over the unassigned labelling, where group labels may shift.
    std::vector<int> rest(group.regimes().begin(), group.regimes().end());
    auto direct = direct_proposal(panel, hypers, rest, t, 0.7);
    const oracle::Real total = oracle::logsumexp(direct);
    std::vector<double> expected;
    for (auto w : direct) expected.push_back(static_cast<double>(std::exp(w - total)));
    REQUIRE(got.size() == expected.size());
    CHECK(synth::total_variation(got, expected) < 1e-10);
  }
}

TEST_CASE("acceptance ratio boundary cases") {
  trcrp::Rng rng = trcrp::make_rng(3, 0);
  const Panel panel = synth::random_panel(rng, 1, 5, 1, 0.0);
  const auto hypers = hypers_for(panel);
  const ModelView view{panel, hypers};
  GroupModel group(panel, {0}, 1.0, {0, 1, 0, 1, 2});
  group.unassign(2);
  CHECK(trcrp::acceptance_log_ratio(view, group, 2, 1, 1) == 0.0);
  group.assign(2, 1);
  group.unassign(5);
  CHECK(trcrp::acceptance_log_ratio(view, group, 5, 2, 0) == 0.0);
}

TEST_CASE("acceptance ratio equals the exact Metropolis-Hastings ratio") {
  trcrp::Rng rng = trcrp::make_rng(4, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int T = 3 + trial % 4;
    const Panel panel = synth::random_panel(rng, 1 + trial % 2, T, 1 + trial % 2, trial % 3 ? 0.0 : 0.2);
    const auto hypers = hypers_for(panel);
    const ModelView view{panel, hypers};
    const double alpha = 0.5 + trial % 3;
    const auto z = trcrp::canonical_labels(synth::markov_regimes(rng, T, 3, 0.4));
    for (int t = 1; t <= T; ++t) {
      GroupModel group(panel, all_series(panel), alpha, z);
      const auto old_label = static_cast<std::size_t>(group.regime(t));
      const bool singleton = group.count(old_label) == 1;
      group.unassign(t);
      const std::size_t from = singleton ? group.num_regimes() : old_label;
      const auto w = trcrp::proposal_log_weights(view, group, t);
      const double lse = trcrp::logsumexp(w);
      for (std::size_t to = 0; to < w.size(); ++to) {
        GroupModel moved = group;
        moved.assign(t, to);
        GroupModel stay = group;
        stay.assign(t, from);
        const double delta = trcrp::partial_loglik(view, moved.members(), moved.regimes(), alpha) -
                             trcrp::partial_loglik(view, stay.members(), stay.regimes(), alpha);
        const double expected = delta + (w[from] - lse) - (w[to] - lse);
        CHECK(std::abs(trcrp::acceptance_log_ratio(view, group, t, from, to) - expected) < 1e-8);
      }
    }
  }
}

TEST_CASE("sweeps keep statistics exact") {
  trcrp::Rng rng = trcrp::make_rng(5, 0);
  for (int trial = 0; trial < 6; ++trial) {
    const Panel panel = synth::random_panel(rng, 2, 25, trial % 3, 0.2);
    const auto hypers = hypers_for(panel);
    GroupModel group(panel, all_series(panel), 1.0, std::vector<int>(25, 0));
    for (int s = 0; s < 20; ++s) {
      const trcrp::MhConfig config{s % 2 == 0, 1, s % 3 == 0};
      const auto stats = trcrp::sweep_z(ModelView{panel, hypers}, group, config, rng);
      CHECK(stats.proposals == 25);
      CHECK(group.max_stats_error() < 1e-8);
    }
  }
}

TEST_CASE("degenerate data with a forced single regime never moves") {
  const Panel panel = synth::make_panel({{1.0, 1.0, 1.0, 1.0, 1.0, 1.0}}, 1);
  const auto hypers = hypers_for(panel, NigHyper{1.0, 1e-6, 1e6, 1e-6});
  GroupModel group(panel, {0}, 1e-300, std::vector<int>(5, 0));
  trcrp::Rng rng = trcrp::make_rng(6, 0);
  for (int s = 0; s < 50; ++s) {
    const auto stats = trcrp::sweep_z(ModelView{panel, hypers}, group, trcrp::MhConfig{}, rng);
    CHECK(stats.changes == 0);
  }
  for (int k : group.regimes()) CHECK(k == 0);
}

TEST_CASE("full MH sampler targets the enumerated posterior") {
  const Panel panel = synth::make_panel({{0.0, -1.0, 1.2, -0.8, 1.0}}, 1);
  const auto hypers = hypers_for(panel);
  const double alpha = 1.0;
  const auto parts = oracle::partitions(4);
  std::vector<oracle::Real> logp;
  for (const auto& z : parts) logp.push_back(oracle::group_loglik(panel, {0}, hypers, z, alpha));
  const oracle::Real total = oracle::logsumexp(logp);
  std::vector<double> exact;
  for (auto x : logp) exact.push_back(static_cast<double>(std::exp(x - total)));

  std::map<std::vector<int>, std::size_t> index;
  for (std::size_t i = 0; i < parts.size(); ++i) index[parts[i]] = i;
  GroupModel group(panel, {0}, alpha, {0, 0, 0, 0});
  trcrp::Rng rng = trcrp::make_rng(7, 0);
  std::vector<double> freq(parts.size(), 0.0);
  const int sweeps = 100000;
  for (int s = 0; s < sweeps; ++s) {
    trcrp::sweep_z(ModelView{panel, hypers}, group, trcrp::MhConfig{}, rng);
    freq[index.at(std::vector<int>(group.regimes().begin(), group.regimes().end()))] += 1.0 / sweeps;
  }
  CHECK(synth::total_variation(freq, exact) < 0.02);
}
