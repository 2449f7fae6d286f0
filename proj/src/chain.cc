// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/chain.hh"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trcrp/errors.hh"

namespace trcrp {

std::vector<std::size_t> ChainState::group_sizes() const {
  std::vector<std::size_t> sizes(groups.size(), 0);
  for (int c : assignments) ++sizes[static_cast<std::size_t>(c)];
  return sizes;
}

double outer_crp_log_mass(const ChainState& state) {
  const auto sizes = state.group_sizes();
  return crp_log_partition_mass(sizes, state.alpha0);
}

double log_joint(const Panel& panel, const ChainState& state) {
  double acc = log_gamma11(state.alpha0) + outer_crp_log_mass(state);
  for (const auto& group : state.groups) {
    acc += log_gamma11(group.alpha()) + group.loglik(state.hypers);
  }
  (void)panel;
  return acc;
}

double log_joint_fresh(const Panel& panel, const ChainState& state) {
  double acc = log_gamma11(state.alpha0) + outer_crp_log_mass(state);
  const ModelView view = state.view(panel);
  for (const auto& group : state.groups) {
    acc += log_gamma11(group.alpha()) +
           partial_loglik(view, group.members(), group.regimes(), group.alpha());
  }
  return acc;
}

double max_stats_error(const ChainState& state) {
  double err = 0.0;
  for (const auto& group : state.groups) err = std::max(err, group.max_stats_error());
  return err;
}

void check_partition(const ChainState& state) {
  std::vector<std::vector<std::size_t>> members(state.groups.size());
  for (std::size_t n = 0; n < state.assignments.size(); ++n) {
    const int c = state.assignments[n];
    if (c < 0 || static_cast<std::size_t>(c) >= state.groups.size()) {
      throw std::logic_error("outer assignment out of range");
    }
    members[static_cast<std::size_t>(c)].push_back(n);
  }
  for (std::size_t m = 0; m < state.groups.size(); ++m) {
    if (members[m].empty()) throw std::logic_error("empty outer cluster");
    if (members[m] != state.groups[m].members()) {
      throw std::logic_error("group members disagree with outer assignments");
    }
  }
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_from_string(const std::string& text) {
  std::istringstream in(text);
  Rng rng;
  in >> rng;
  if (!in) throw DataError("malformed generator state");
  return rng;
}

namespace {

nlohmann::json hyper_to_json(const NigHyper& h) {
  return {{"m", h.m}, {"V", h.V}, {"a", h.a}, {"b", h.b}};
}

NigHyper hyper_from_json(const nlohmann::json& j) {
  NigHyper h{j.at("m").get<double>(), j.at("V").get<double>(), j.at("a").get<double>(),
             j.at("b").get<double>()};
  if (!h.valid()) throw DataError("invalid Normal-InverseGamma hyperparameters in checkpoint");
  return h;
}

}  // namespace

nlohmann::json chain_to_json(const ChainState& state) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& group : state.groups) {
    groups.push_back({{"alpha", group.alpha()},
                      {"members", group.members()},
                      {"regimes", std::vector<int>(group.regimes().begin(), group.regimes().end())}});
  }
  nlohmann::json hypers = nlohmann::json::array();
  for (const auto& h : state.hypers) {
    nlohmann::json lags = nlohmann::json::array();
    for (const auto& lag : h.lags) lags.push_back(hyper_to_json(lag));
    hypers.push_back({{"emission", hyper_to_json(h.emission)}, {"lags", lags}});
  }
  return {{"version", kChainSchemaVersion},
          {"alpha0", state.alpha0},
          {"assignments", state.assignments},
          {"groups", groups},
          {"hypers", hypers},
          {"rng", rng_to_string(state.rng)}};
}

ChainState chain_from_json(const nlohmann::json& j, const Panel& panel) {
  if (j.at("version").get<int>() != kChainSchemaVersion) {
    throw DataError("unsupported chain schema version " + j.at("version").dump());
  }
  ChainState state;
  state.alpha0 = j.at("alpha0").get<double>();
  state.assignments = j.at("assignments").get<std::vector<int>>();
  if (state.assignments.size() != panel.num_series()) {
    throw DataError("checkpoint does not match the panel's number of series");
  }
  for (const auto& h : j.at("hypers")) {
    SeriesHypers sh;
    sh.emission = hyper_from_json(h.at("emission"));
    for (const auto& lag : h.at("lags")) sh.lags.push_back(hyper_from_json(lag));
    if (sh.lags.size() != panel.window()) throw DataError("checkpoint window mismatch");
    state.hypers.push_back(std::move(sh));
  }
  if (state.hypers.size() != panel.num_series()) {
    throw DataError("checkpoint hyperparameters do not match the panel");
  }
  for (const auto& g : j.at("groups")) {
    state.groups.emplace_back(panel, g.at("members").get<std::vector<std::size_t>>(),
                              g.at("alpha").get<double>(), g.at("regimes").get<std::vector<int>>());
  }
  state.rng = rng_from_string(j.at("rng").get<std::string>());
  try {
    check_partition(state);
  } catch (const std::logic_error& e) {
    throw DataError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return state;
}

}  // namespace trcrp
