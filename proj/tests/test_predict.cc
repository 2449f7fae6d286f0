// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <cmath>
#include <memory>

#include "synthetic.hh"
#include "trcrp/errors.hh"
#include "trcrp/fit.hh"
#include "trcrp/predict.hh"

using trcrp::ChainState;
using trcrp::NigHyper;
using trcrp::Panel;
using trcrp::SampleSet;

namespace {

SampleSet single_chain(std::shared_ptr<const Panel> panel, const NigHyper& h, double alpha,
                       std::vector<int> z) {
  ChainState state;
  state.assignments.assign(panel->num_series(), 0);
  state.hypers.assign(panel->num_series(),
                      trcrp::SeriesHypers{h, std::vector<NigHyper>(panel->window(), h)});
  std::vector<std::size_t> members(panel->num_series());
  for (std::size_t n = 0; n < members.size(); ++n) members[n] = n;
  state.groups.emplace_back(*panel, members, alpha, std::move(z));
  SampleSet samples;
  samples.panel = panel;
  samples.config = nlohmann::json::object();
  samples.chains.push_back(std::move(state));
  samples.records.push_back({});
  return samples;
}

trcrp::RunConfig small_config(std::size_t window, std::uint64_t seed) {
  trcrp::RunConfig config;
  config.window = window;
  config.chains = 4;
  config.burnin = 150;
  config.particles = 16;
  config.seed = seed;
  config.hyper_cadence = 5;
  config.deterministic = true;
  return config;
}

}  // namespace

TEST_CASE("forecast rejects an empty horizon") {
  const auto panel = std::make_shared<const Panel>(synth::make_panel({{0.1, 0.2, 0.3}}, 0));
  const auto samples = single_chain(panel, NigHyper{}, 1.0, {0, 0, 0});
  CHECK_THROWS_AS(trcrp::forecast(samples, 0, 10, 1), trcrp::UsageError);
}

TEST_CASE("forecast collapses onto a sharp regime") {
  trcrp::Rng rng = trcrp::make_rng(1, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> row;
  for (int t = 0; t < 200; ++t) row.push_back(3.0 + 0.01 * normal(rng));
  const auto panel = std::make_shared<const Panel>(synth::make_panel({row}, 0));
  const NigHyper sharp{0.0, 1.0, 1e4, 1e-4};
  const auto samples = single_chain(panel, sharp, 1e-12, std::vector<int>(200, 0));
  const auto result = trcrp::forecast(samples, 1, 4000, 2);
  double mean = 0;
  for (double x : row) mean += x;
  mean /= 200;
  const auto pred = trcrp::predictive(sharp, samples.chains[0].groups[0].stats(0).cells[0]);
  const double sd = std::sqrt(pred.scale_sq * pred.dof / (pred.dof - 2));
  CHECK(std::abs(result.summary[0][0].mean - mean) < 3 * sd);
  CHECK(result.summary[0][0].q05 <= result.summary[0][0].q50);
  CHECK(result.summary[0][0].q50 <= result.summary[0][0].q95);
}

TEST_CASE("forecast draws are reproducible and share regimes within a group") {
  trcrp::Rng rng = trcrp::make_rng(2, 0);
  const auto panel = std::make_shared<const Panel>(synth::random_panel(rng, 3, 20, 2, 0.1));
  const auto fitted = trcrp::fit(panel, small_config(2, 5));
  const auto a = trcrp::forecast(fitted.samples, 5, 50, 11);
  const auto b = trcrp::forecast(fitted.samples, 5, 50, 11);
  REQUIRE(a.draws.size() == 50);
  for (std::size_t r = 0; r < 50; ++r) {
    CHECK(a.draws[r].chain == b.draws[r].chain);
    CHECK(a.draws[r].values == b.draws[r].values);
    const auto& chain = fitted.samples.chains[a.draws[r].chain];
    CHECK(a.draws[r].regimes.size() == chain.groups.size());
    for (const auto& path : a.draws[r].regimes) CHECK(path.size() == 5);
    for (const auto& series : a.draws[r].values) CHECK(series.size() == 5);
  }
}

TEST_CASE("seasonal forecasts beat three-point extrapolation") {
  int wins = 0;
  const int reps = 5;
  for (int rep = 0; rep < reps; ++rep) {
    trcrp::Rng rng = trcrp::make_rng(100 + rep, 0);
    const int period = 6;
    const std::size_t p = 6;
    const int T = 60;
    const auto rows = synth::seasonal_rows(rng, 1, static_cast<int>(p) + T + period, period, 0.05);
    std::vector<double> train(rows[0].begin(), rows[0].begin() + static_cast<long>(p) + T);
    const auto panel = std::make_shared<const Panel>(synth::make_panel({train}, p));
    const auto fitted = trcrp::fit(panel, small_config(p, 200 + rep));
    const auto result = trcrp::forecast(fitted.samples, period, 200, 3);
    const double x0 = train[train.size() - 3];
    const double x1 = train[train.size() - 2];
    const double x2 = train[train.size() - 1];
    const double slope = (x2 - x0) / 2;
    const double centre = (x0 + x1 + x2) / 3;
    double mae_model = 0;
    double mae_line = 0;
    for (int h = 1; h <= period; ++h) {
      const double truth = rows[0][train.size() + static_cast<std::size_t>(h - 1)];
      mae_model += std::abs(result.summary[0][static_cast<std::size_t>(h - 1)].mean - truth);
      mae_line += std::abs(centre + slope * (h + 1) - truth);
    }
    wins += mae_model < mae_line;
  }
  CHECK(wins == reps);
}

TEST_CASE("imputation of a degenerate regime") {
  trcrp::Rng rng = trcrp::make_rng(3, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> row;
  for (int t = 0; t < 100; ++t) row.push_back(t == 50 ? synth::kMissing : 7.0 + 1e-3 * normal(rng));
  const auto panel = std::make_shared<const Panel>(synth::make_panel({row}, 0));
  const auto samples = single_chain(panel, NigHyper{0.0, 1.0, 1e4, 1e-4}, 1.0, std::vector<int>(100, 0));
  const auto cells = trcrp::impute(samples, 2000, 4);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].series == 0);
  CHECK(cells[0].time == 51);
  CHECK(std::abs(cells[0].summary.mean - 7.0) < 0.05 * 7.0 + 0.05);
}

TEST_CASE("imputation only covers missing cells") {
  trcrp::Rng rng = trcrp::make_rng(4, 0);
  const auto full = std::make_shared<const Panel>(synth::random_panel(rng, 2, 10, 1, 0.0));
  const auto samples = single_chain(full, NigHyper{}, 1.0, std::vector<int>(10, 0));
  CHECK(trcrp::impute(samples, 10, 1).empty());

  const auto holey = std::make_shared<const Panel>(synth::random_panel(rng, 3, 30, 1, 0.2));
  const auto fitted = trcrp::fit(holey, small_config(1, 9));
  const auto cells = trcrp::impute(fitted.samples, 10, 1);
  CHECK(cells.size() == holey->missing_cells().size());
  for (const auto& cell : cells) {
    CHECK_FALSE(holey->observed(cell.series, cell.time));
    CHECK(cell.draws.size() == 10);
  }
}

TEST_CASE("imputation means converge to the mixture mean") {
  trcrp::Rng rng = trcrp::make_rng(5, 0);
  const auto panel = std::make_shared<const Panel>(synth::random_panel(rng, 2, 25, 1, 0.1));
  REQUIRE_FALSE(panel->missing_cells().empty());
  const auto fitted = trcrp::fit(panel, small_config(1, 12));
  const std::size_t R = 10000;
  const auto cells = trcrp::impute(fitted.samples, R, 6);
  for (const auto& cell : cells) {
    const double analytic = trcrp::imputation_mixture_mean(fitted.samples, cell.series, cell.time);
    CHECK(std::abs(cell.summary.mean - analytic) < 3 * cell.summary.sd / std::sqrt(static_cast<double>(R)));
  }
}

TEST_CASE("dependence probabilities") {
  trcrp::Rng rng = trcrp::make_rng(6, 0);
  const auto one = std::make_shared<const Panel>(synth::random_panel(rng, 1, 5, 0, 0.0));
  const auto lone = single_chain(one, NigHyper{}, 1.0, std::vector<int>(5, 0));
  CHECK(trcrp::dependence_matrix(lone) == std::vector<std::vector<double>>{{1.0}});

  const auto three = std::make_shared<const Panel>(synth::random_panel(rng, 3, 5, 0, 0.0));
  auto samples = single_chain(three, NigHyper{}, 1.0, std::vector<int>(5, 0));
  CHECK(trcrp::dependence_probability(samples, 0, 2) == 1.0);

  // Add chains with other partitions and compare against direct averages.
  const std::vector<std::vector<int>> layouts = {{0, 0, 1}, {0, 1, 2}, {0, 1, 0}};
  for (const auto& layout : layouts) {
    ChainState state;
    state.assignments = layout;
    state.hypers = samples.chains[0].hypers;
    int M = 0;
    for (int c : layout) M = std::max(M, c + 1);
    for (int m = 0; m < M; ++m) {
      std::vector<std::size_t> members;
      for (std::size_t n = 0; n < 3; ++n) {
        if (layout[n] == m) members.push_back(n);
      }
      state.groups.emplace_back(*three, members, 1.0, std::vector<int>(5, 0));
    }
    samples.chains.push_back(std::move(state));
    samples.records.push_back({});
  }
  const auto matrix = trcrp::dependence_matrix(samples);
  CHECK(matrix[0][1] == doctest::Approx(0.5));
  CHECK(matrix[0][2] == doctest::Approx(0.5));
  CHECK(matrix[1][2] == doctest::Approx(0.25));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(matrix[i][i] == 1.0);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(matrix[i][k] == matrix[k][i]);
      CHECK(matrix[i][k] >= 0.0);
      CHECK(matrix[i][k] <= 1.0);
    }
  }
}

TEST_CASE("sample sets round trip through json") {
  trcrp::Rng rng = trcrp::make_rng(7, 0);
  const auto panel = std::make_shared<const Panel>(synth::random_panel(rng, 2, 12, 2, 0.1));
  auto config = small_config(2, 3);
  config.hierarchical = true;
  const auto fitted = trcrp::fit(panel, config);
  const auto j = trcrp::sampleset_to_json(fitted.samples);
  const auto back = trcrp::sampleset_from_json(nlohmann::json::parse(j.dump()));
  CHECK(trcrp::sampleset_to_json(back) == j);
  CHECK(trcrp::forecast(back, 3, 20, 1).draws[7].values == trcrp::forecast(fitted.samples, 3, 20, 1).draws[7].values);

  auto bumped = j;
  bumped["version"] = trcrp::kSampleSetVersion + 1;
  CHECK_THROWS_AS(trcrp::sampleset_from_json(bumped), trcrp::DataError);
  auto broken = j;
  broken["chains"][0]["state"]["assignments"] = {0};
  CHECK_THROWS_AS(trcrp::sampleset_from_json(broken), trcrp::DataError);
  CHECK_THROWS_AS(trcrp::sampleset_from_json(nlohmann::json::object()), trcrp::DataError);
}

TEST_CASE("summaries use equal-tailed quantiles") {
  std::vector<double> xs;
  for (int i = 0; i <= 100; ++i) xs.push_back(i);
  const auto s = trcrp::summarize(xs);
  CHECK(s.mean == doctest::Approx(50));
  CHECK(s.q05 == doctest::Approx(5));
  CHECK(s.q25 == doctest::Approx(25));
  CHECK(s.q75 == doctest::Approx(75));
  CHECK(s.q95 == doctest::Approx(95));
}

TEST_CASE("forecast with a window longer than the series") {
  const auto panel = std::make_shared<const Panel>(
      synth::make_panel({{0.3, 0.5, 0.2, 0.6, 0.1, synth::kMissing, 0.4, 0.2}}, 5));
  const auto samples = single_chain(panel, NigHyper{0.0, 1.0, 2.0, 0.5}, 1.0, {0, 1, 0});
  const auto result = trcrp::forecast(samples, 8, 100, 3);
  for (const auto& s : result.summary[0]) CHECK(std::isfinite(s.mean));
  for (const auto& draw : result.draws)
    for (int k : draw.regimes[0]) CHECK(k >= 0);
}
