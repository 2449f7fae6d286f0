// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/simulate.hh"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trcrp {

SeriesHypers default_hypers(std::size_t window) {
  return SeriesHypers{NigHyper{}, std::vector<NigHyper>(window)};
}

namespace {

double draw_gamma11(Rng& rng) { return -std::log(uniform_open(rng)); }

std::vector<int> draw_crp(std::size_t n, double alpha, Rng& rng) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(sample_log_categorical(crp_log_weights(labels, alpha), rng)));
  }
  return labels;
}

}  // namespace

Simulation simulate(const SimulationConfig& config) {
  const std::size_t N = config.num_series;
  const std::size_t p = config.window;
  const int T = config.num_steps;
  if (N == 0 || T < 1) throw std::invalid_argument("simulation needs N >= 1 and T >= 1");
  std::vector<SeriesHypers> hypers = config.hypers;
  if (hypers.empty()) hypers.assign(N, default_hypers(p));
  if (hypers.size() != N) throw std::invalid_argument("one hyper set per series expected");
  for (const auto& h : hypers) {
    if (h.lags.size() != p) throw std::invalid_argument("lag hypers must match the window");
  }

  Rng rng = make_rng(config.seed, 0);
  const double alpha0 = config.alpha0 ? *config.alpha0 : draw_gamma11(rng);
  std::vector<int> assignments = config.assignments;
  if (assignments.empty()) {
    assignments = config.hierarchical ? draw_crp(N, alpha0, rng) : std::vector<int>(N, 0);
  }
  if (assignments.size() != N) throw std::invalid_argument("one assignment per series expected");
  assignments = canonical_labels(assignments);
  int num_groups = 0;
  for (int c : assignments) num_groups = std::max(num_groups, c + 1);

  const std::size_t rows = p + static_cast<std::size_t>(T);
  std::vector<double> values(N * rows, 0.0);
  auto at = [&](std::size_t n, int t) -> double& {
    return values[n * rows + static_cast<std::size_t>(t + static_cast<int>(p) - 1)];
  };
  for (std::size_t n = 0; n < N; ++n) {
    if (!config.prefix.empty()) {
      if (config.prefix.size() != N || config.prefix[n].size() != p) {
        throw std::invalid_argument("prefix must hold p values per series");
      }
      for (std::size_t i = 0; i < p; ++i) values[n * rows + i] = config.prefix[n][i];
    } else {
      const StudentT prior = predictive(hypers[n].emission, NigStats{});
      for (std::size_t i = 0; i < p; ++i) values[n * rows + i] = prior.sample(rng);
    }
  }

  std::vector<double> alphas;
  std::vector<std::vector<int>> regimes;
  for (int m = 0; m < num_groups; ++m) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < N; ++n) {
      if (assignments[n] == m) members.push_back(n);
    }
    const double alpha = config.alpha ? *config.alpha : draw_gamma11(rng);
    alphas.push_back(alpha);
    const std::size_t width = members.size() * (p + 1);
    std::vector<std::vector<NigStats>> stats;
    std::vector<std::size_t> counts;
    std::vector<int> z;
    const std::vector<NigStats> empty(width);

    auto cohesion = [&](const std::vector<NigStats>& cells, int t) {
      double acc = 0.0;
      for (std::size_t j = 0; j < members.size(); ++j) {
        for (std::size_t i = 1; i <= p; ++i) {
          acc += predictive_logpdf(hypers[members[j]].lags[i - 1], cells[j * (p + 1) + i],
                                   at(members[j], t - static_cast<int>(i)));
        }
      }
      return acc;
    };

    for (int t = 1; t <= T; ++t) {
      std::vector<double> weights;
      for (std::size_t k = 0; k < stats.size(); ++k) {
        weights.push_back(std::log(static_cast<double>(counts[k])) + cohesion(stats[k], t));
      }
      weights.push_back(std::log(alpha) + cohesion(empty, t));
      const std::size_t k = sample_log_categorical(weights, rng);
      if (k == stats.size()) {
        stats.push_back(empty);
        counts.push_back(0);
      }
      z.push_back(static_cast<int>(k));
      auto& cells = stats[k];
      for (std::size_t j = 0; j < members.size(); ++j) {
        const std::size_t n = members[j];
        at(n, t) = predictive(hypers[n].emission, cells[j * (p + 1)]).sample(rng);
        cells[j * (p + 1)].incorporate(at(n, t));
        for (std::size_t i = 1; i <= p; ++i) {
          cells[j * (p + 1) + i].incorporate(at(n, t - static_cast<int>(i)));
        }
      }
      ++counts[k];
    }
    regimes.push_back(std::move(z));
  }

  std::vector<std::string> names;
  for (std::size_t n = 0; n < N; ++n) names.push_back("x" + std::to_string(n + 1));
  std::vector<std::string> labels;
  for (int t = 1 - static_cast<int>(p); t <= T; ++t) labels.push_back(std::to_string(t));
  Panel panel(std::move(names), std::move(labels), p, std::move(values),
              std::vector<bool>(N * rows, true));
  return Simulation{std::move(panel), alpha0, std::move(assignments), std::move(alphas),
                    std::move(regimes), std::move(hypers)};
}

ChainState latent_state(const Simulation& sim) {
  ChainState state;
  state.alpha0 = sim.alpha0;
  state.assignments = sim.assignments;
  state.hypers = sim.hypers;
  for (std::size_t m = 0; m < sim.regimes.size(); ++m) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < sim.assignments.size(); ++n) {
      if (sim.assignments[n] == static_cast<int>(m)) members.push_back(n);
    }
    state.groups.emplace_back(sim.panel, std::move(members), sim.alphas[m], sim.regimes[m]);
  }
  return state;
}

nlohmann::json latent_to_json(const Simulation& sim) {
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t m = 0; m < sim.regimes.size(); ++m) {
    groups.push_back({{"alpha", sim.alphas[m]}, {"regimes", sim.regimes[m]}});
  }
  return {{"alpha0", sim.alpha0},
          {"assignments", sim.assignments},
          {"num_groups", sim.regimes.size()},
          {"groups", groups}};
}

}  // namespace trcrp
