// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <cmath>

#include "oracle.hh"
#include "synthetic.hh"
#include "trcrp/chain.hh"
#include "trcrp/structure.hh"

using trcrp::ChainState;
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

ChainState make_state(const Panel& panel, const std::vector<int>& assignments, trcrp::Rng& rng,
                      double alpha0 = 1.0) {
  ChainState state;
  state.alpha0 = alpha0;
  state.assignments = trcrp::canonical_labels(assignments);
  state.hypers = hypers_for(panel);
  int M = 0;
  for (int c : state.assignments) M = std::max(M, c + 1);
  for (int m = 0; m < M; ++m) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < assignments.size(); ++n) {
      if (state.assignments[n] == m) members.push_back(n);
    }
    state.groups.emplace_back(panel, members, 0.5 + m,
                              synth::markov_regimes(rng, panel.num_steps(), 2, 0.5));
  }
  return state;
}

}  // namespace

TEST_CASE("a lone series can only stay") {
  trcrp::Rng rng = trcrp::make_rng(1, 0);
  const Panel panel = synth::random_panel(rng, 1, 6, 1, 0.0);
  auto state = make_state(panel, {0}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto proposal = trcrp::propose_c(panel, state, 0, rng);
    CHECK(proposal.log_weights[0] == trcrp::kNegInf);
    CHECK(proposal.choice == proposal.new_group());
    CHECK(trcrp::is_identity_move(state, 0, proposal));
    CHECK(proposal.fresh_regimes ==
          std::vector<int>(state.groups[0].regimes().begin(), state.groups[0].regimes().end()));
  }
  const auto before = trcrp::chain_to_json(state);
  trcrp::sweep_c(panel, state, true);
  auto after = trcrp::chain_to_json(state);
  after["rng"] = before["rng"];
  CHECK(after == before);
}

TEST_CASE("empty subset and cache reuse") {
  trcrp::Rng rng = trcrp::make_rng(2, 0);
  const Panel panel = synth::random_panel(rng, 2, 8, 1, 0.1);
  const auto hypers = hypers_for(panel);
  const ModelView view{panel, hypers};
  const std::vector<int> z = {0, 0, 1, 1, 0, 2, 2, 1};
  CHECK(trcrp::partial_loglik(view, {}, z, 1.0) == 0.0);
  const GroupModel group(panel, {0, 1}, 1.3, z);
  const double cached = group.loglik(hypers);
  CHECK(group.loglik(hypers) == cached);
  CHECK(cached == trcrp::partial_loglik(view, group.members(), group.regimes(), 1.3));
  CHECK(std::abs(cached - static_cast<double>(oracle::group_loglik(panel, {0, 1}, hypers, z, 1.3))) < 1e-10);
}

TEST_CASE("identical series see symmetric join weights") {
  const std::vector<double> row = {0.3, 1.0, -0.5, 0.8, 0.2, -1.0};
  const Panel panel = synth::make_panel({row, row}, 1);
  trcrp::Rng rng = trcrp::make_rng(3, 0);
  ChainState state;
  state.assignments = {0, 1};
  state.hypers = hypers_for(panel);
  const std::vector<int> z = {0, 1, 1, 0, 2};
  state.groups.emplace_back(panel, std::vector<std::size_t>{0}, 1.0, z);
  state.groups.emplace_back(panel, std::vector<std::size_t>{1}, 1.0, z);
  const auto a = trcrp::c_proposal_weights(panel, state, 0, rng);
  const auto b = trcrp::c_proposal_weights(panel, state, 1, rng);
  CHECK(a.log_weights[1] == doctest::Approx(b.log_weights[0]).epsilon(1e-14));
  CHECK(a.log_weights[2] == doctest::Approx(b.log_weights[2]).epsilon(1e-14));
}

TEST_CASE("proposal weights against direct evaluation") {
  trcrp::Rng rng = trcrp::make_rng(4, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Panel panel = synth::random_panel(rng, 4, 5, trial % 2, 0.1);
    auto state = make_state(panel, {0, 0, 1, trial % 3 == 0 ? 2 : 1}, rng, 0.7);
    for (std::size_t n = 0; n < 4; ++n) {
      const auto proposal = trcrp::c_proposal_weights(panel, state, n, rng);
      std::vector<oracle::Real> direct;
      for (std::size_t m = 0; m < state.groups.size(); ++m) {
        const auto& g = state.groups[m];
        const double size = static_cast<double>(g.members().size()) - (state.assignments[n] == static_cast<int>(m));
        const std::vector<int> z(g.regimes().begin(), g.regimes().end());
        direct.push_back(size > 0 ? std::log(static_cast<oracle::Real>(size)) +
                                        oracle::group_loglik(panel, {n}, state.hypers, z, g.alpha())
                                  : -std::numeric_limits<oracle::Real>::infinity());
      }
      direct.push_back(std::log(static_cast<oracle::Real>(0.7)) +
                       oracle::group_loglik(panel, {n}, state.hypers, proposal.fresh_regimes,
                                            proposal.fresh_alpha));
      const auto got = trcrp::normalize_log_weights(proposal.log_weights);
      const oracle::Real total = oracle::logsumexp(direct);
      std::vector<double> expected;
      for (auto w : direct) expected.push_back(static_cast<double>(std::exp(w - total)));
      CHECK(synth::total_variation(got, expected) < 1e-10);
    }
  }
}

TEST_CASE("acceptance ratio against log joint differencing") {
  trcrp::Rng rng = trcrp::make_rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Panel panel = synth::random_panel(rng, 3, 3, 1, 0.0);
    const std::vector<int> layout = trial % 2 ? std::vector<int>{0, 0, 1} : std::vector<int>{0, 1, 1};
    const auto state = make_state(panel, layout, rng, 0.9);
    for (std::size_t n = 0; n < 3; ++n) {
      auto proposal = trcrp::c_proposal_weights(panel, state, n, rng);
      for (std::size_t choice = 0; choice < proposal.log_weights.size(); ++choice) {
        proposal.choice = choice;
        if (trcrp::is_identity_move(state, n, proposal)) {
          CHECK(trcrp::c_acceptance_log_ratio(panel, state, n, proposal) == 0.0);
          continue;
        }
        if (proposal.log_weights[choice] == trcrp::kNegInf) continue;
        ChainState moved = state;
        trcrp::apply_c_move(panel, moved, n, proposal);
        CHECK(trcrp::max_stats_error(moved) < 1e-8);
        CHECK_NOTHROW(trcrp::check_partition(moved));
        const double delta = trcrp::log_joint_fresh(panel, moved) - trcrp::log_joint_fresh(panel, state);

        // Reverse proposal weight of putting n back from the moved state.
        const auto source = static_cast<std::size_t>(state.assignments[n]);
        const bool source_dies = state.groups[source].members().size() == 1;
        double log_w_rev;
        double prior_residual = 0.0;
        const bool creates = choice == proposal.new_group();
        if (source_dies) {
          log_w_rev = std::log(state.alpha0) + trcrp::partial_loglik(state.view(panel), std::vector<std::size_t>{n},
                                                                     state.groups[source].regimes(),
                                                                     state.groups[source].alpha());
          prior_residual -= state.groups[source].alpha();
        } else {
          const double size = static_cast<double>(state.groups[source].members().size() - 1);
          log_w_rev = std::log(size) + trcrp::partial_loglik(state.view(panel), std::vector<std::size_t>{n},
                                                             state.groups[source].regimes(),
                                                             state.groups[source].alpha());
        }
        if (creates) prior_residual += proposal.fresh_alpha;
        const double expected = delta + log_w_rev - proposal.log_weights[choice] + prior_residual;
        CHECK(std::abs(trcrp::c_acceptance_log_ratio(panel, state, n, proposal) - expected) < 1e-8);
      }
    }
  }
}

TEST_CASE("ratio does not depend on group labels") {
  trcrp::Rng rng = trcrp::make_rng(6, 0);
  const Panel panel = synth::random_panel(rng, 3, 6, 1, 0.0);
  const auto hypers = hypers_for(panel);
  const std::vector<int> za = {0, 0, 1, 1, 0, 1};
  const std::vector<int> zb = {0, 1, 2, 0, 1, 2};
  ChainState a;
  a.assignments = {0, 0, 1};
  a.hypers = hypers;
  a.groups.emplace_back(panel, std::vector<std::size_t>{0, 1}, 1.0, za);
  a.groups.emplace_back(panel, std::vector<std::size_t>{2}, 2.0, zb);
  ChainState b;
  b.assignments = {1, 1, 0};
  b.hypers = hypers;
  b.groups.emplace_back(panel, std::vector<std::size_t>{2}, 2.0, zb);
  b.groups.emplace_back(panel, std::vector<std::size_t>{0, 1}, 1.0, za);
  trcrp::Rng ra = trcrp::make_rng(1, 1);
  trcrp::Rng rb = trcrp::make_rng(1, 1);
  auto pa = trcrp::c_proposal_weights(panel, a, 1, ra);
  auto pb = trcrp::c_proposal_weights(panel, b, 1, rb);
  pa.choice = 1;
  pb.choice = 0;
  CHECK(trcrp::c_acceptance_log_ratio(panel, a, 1, pa) == doctest::Approx(trcrp::c_acceptance_log_ratio(panel, b, 1, pb)).epsilon(1e-13));
  pa.choice = pa.new_group();
  pb.choice = pb.new_group();
  CHECK(trcrp::c_acceptance_log_ratio(panel, a, 1, pa) == doctest::Approx(trcrp::c_acceptance_log_ratio(panel, b, 1, pb)).epsilon(1e-13));
}

TEST_CASE("sweeps preserve the partition invariants") {
  trcrp::Rng rng = trcrp::make_rng(7, 0);
  const Panel panel = synth::random_panel(rng, 6, 12, 1, 0.2);
  auto state = make_state(panel, {0, 1, 2, 0, 1, 2}, rng, 2.0);
  state.rng = trcrp::make_rng(7, 1);
  for (int s = 0; s < 60; ++s) {
    trcrp::sweep_c(panel, state, s % 4 != 0);
    CHECK_NOTHROW(trcrp::check_partition(state));
    CHECK(state.assignments == trcrp::canonical_labels(state.assignments));
    CHECK(trcrp::max_stats_error(state) < 1e-8);
    CHECK(std::isfinite(trcrp::log_joint(panel, state)));
    CHECK(trcrp::log_joint(panel, state) == doctest::Approx(trcrp::log_joint_fresh(panel, state)).epsilon(1e-12));
  }
}

TEST_CASE("vanishing alpha0 keeps one group on coherent data") {
  trcrp::Rng rng = trcrp::make_rng(8, 0);
  const auto rows = synth::seasonal_rows(rng, 1, 25, 8, 0.1);
  const Panel panel = synth::make_panel({rows[0], rows[0], rows[0]}, 1);
  auto state = make_state(panel, {0, 0, 0}, rng, 1e-300);
  for (int s = 0; s < 1000; ++s) {
    trcrp::sweep_c(panel, state, true);
    REQUIRE(state.groups.size() == 1);
  }
}

TEST_CASE("a single series hierarchy matches the flat model") {
  trcrp::Rng rng = trcrp::make_rng(9, 0);
  const Panel panel = synth::random_panel(rng, 1, 10, 2, 0.1);
  const auto state = make_state(panel, {0}, rng, 1.7);
  const double flat = -state.groups[0].alpha() + state.groups[0].loglik(state.hypers);
  CHECK(trcrp::log_joint(panel, state) == doctest::Approx(flat - 1.7).epsilon(1e-13));
  CHECK(trcrp::outer_crp_log_mass(state) == doctest::Approx(0.0));
}

TEST_CASE("fresh sequences come from the lag-reweighted prior") {
  const Panel panel = synth::make_panel({{0.0, 0.1, 0.2, 0.3, 0.4}}, 0);
  const auto hypers = hypers_for(panel);
  trcrp::Rng rng = trcrp::make_rng(10, 0);
  // Without lags this is a CRP draw; all distinct has probability 1/5! at alpha 1.
  int distinct = 0;
  const int sims = 20000;
  for (int s = 0; s < sims; ++s) {
    const std::size_t member[] = {0};
    const auto z = trcrp::sample_prior_regimes(ModelView{panel, hypers}, member, 1.0, rng);
    distinct += z == std::vector<int>{0, 1, 2, 3, 4};
  }
  const double expected = 1.0 / 120.0;
  CHECK(std::abs(distinct / static_cast<double>(sims) - expected) < 4 * std::sqrt(expected / sims));
}
