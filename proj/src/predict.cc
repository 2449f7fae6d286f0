// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/predict.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trcrp/errors.hh"

namespace trcrp {

nlohmann::json panel_to_json(const Panel& panel) {
  nlohmann::json values = nlohmann::json::array();
  const int p = static_cast<int>(panel.window());
  for (std::size_t n = 0; n < panel.num_series(); ++n) {
    nlohmann::json row = nlohmann::json::array();
    for (int t = 1 - p; t <= panel.num_steps(); ++t) {
      if (panel.observed(n, t)) {
        row.push_back(panel.value(n, t));
      } else {
        row.push_back(nullptr);
      }
    }
    values.push_back(std::move(row));
  }
  return {{"series", panel.series_names()},
          {"time", panel.time_labels()},
          {"window", panel.window()},
          {"values", values}};
}

Panel panel_from_json(const nlohmann::json& j) {
  auto names = j.at("series").get<std::vector<std::string>>();
  auto labels = j.at("time").get<std::vector<std::string>>();
  const auto window = j.at("window").get<std::size_t>();
  std::vector<double> values;
  std::vector<bool> observed;
  const auto& rows = j.at("values");
  if (rows.size() != names.size()) throw DataError("panel rows do not match series names");
  for (const auto& row : rows) {
    if (row.size() != labels.size()) throw DataError("panel row length does not match time labels");
    for (const auto& cell : row) {
      if (cell.is_null()) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        observed.push_back(false);
      } else {
        values.push_back(cell.get<double>());
        observed.push_back(true);
      }
    }
  }
  return Panel(std::move(names), std::move(labels), window, std::move(values), std::move(observed));
}

nlohmann::json sampleset_to_json(const SampleSet& samples) {
  nlohmann::json chains = nlohmann::json::array();
  for (std::size_t s = 0; s < samples.chains.size(); ++s) {
    const auto& rec = samples.records[s];
    chains.push_back({{"seed", rec.seed},
                      {"stream", rec.stream},
                      {"burnin", rec.burnin},
                      {"sweeps", rec.sweeps},
                      {"schedule", rec.schedule},
                      {"state", chain_to_json(samples.chains[s])}});
  }
  return {{"format", "trcrp-sampleset"},
          {"version", kSampleSetVersion},
          {"config_hash", samples.config_hash},
          {"config", samples.config},
          {"panel", panel_to_json(*samples.panel)},
          {"chains", chains}};
}

SampleSet sampleset_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "trcrp-sampleset") throw DataError("not a sample set file");
    const int version = j.at("version").get<int>();
    if (version != kSampleSetVersion) {
      throw DataError("sample set schema version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kSampleSetVersion) + ")");
    }
    SampleSet samples;
    samples.panel = std::make_shared<const Panel>(panel_from_json(j.at("panel")));
    samples.config = j.at("config");
    samples.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& c : j.at("chains")) {
      ChainRecord rec;
      rec.seed = c.at("seed").get<std::uint64_t>();
      rec.stream = c.at("stream").get<std::uint64_t>();
      rec.burnin = c.at("burnin").get<int>();
      rec.sweeps = c.at("sweeps").get<int>();
      rec.schedule = c.at("schedule").get<std::string>();
      samples.records.push_back(rec);
      samples.chains.push_back(chain_from_json(c.at("state"), *samples.panel));
    }
    if (samples.chains.empty()) throw DataError("sample set holds no chains");
    return samples;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed sample set: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed sample set: ") + e.what());
  }
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::size_t pick_chain(const SampleSet& samples, Rng& rng) {
  const auto S = samples.chains.size();
  return std::min(S - 1, static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(S)));
}

}  // namespace

Summary summarize(std::vector<double> xs) {
  Summary s;
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  s.q05 = quantile(xs, 0.05);
  s.q25 = quantile(xs, 0.25);
  s.q50 = quantile(xs, 0.5);
  s.q75 = quantile(xs, 0.75);
  s.q95 = quantile(xs, 0.95);
  return s;
}

ForecastResult forecast(const SampleSet& samples, int horizon, std::size_t draws, std::uint64_t seed) {
  if (horizon < 1) throw UsageError("forecast horizon must be at least 1");
  if (draws < 1) throw UsageError("number of draws must be at least 1");
  const Panel& panel = *samples.panel;
  const std::size_t N = panel.num_series();
  const std::size_t p = panel.window();
  const int T = panel.num_steps();
  Rng rng = make_rng(seed, 0);
  ForecastResult result;
  result.horizon = horizon;

  for (std::size_t r = 0; r < draws; ++r) {
    const std::size_t s = pick_chain(samples, rng);
    const ChainState& chain = samples.chains[s];
    const ModelView view = chain.view(panel);
    ForecastDraw draw;
    draw.chain = s;
    draw.values.assign(N, std::vector<double>(static_cast<std::size_t>(horizon)));
    for (const GroupModel& group : chain.groups) {
      const auto& members = group.members();
      const std::size_t width = p + 1;
      std::vector<RegimeStats> stats;
      for (std::size_t k = 0; k < group.num_regimes(); ++k) stats.push_back(group.stats(k));
      // recent[j*p + i]: x_{T-p+1+i} of member j, completing unobserved cells.
      std::vector<double> recent(members.size() * p);
      for (std::size_t j = 0; j < members.size(); ++j) {
        const std::size_t n = members[j];
        for (std::size_t i = 0; i < p; ++i) {
          const int t = T - static_cast<int>(p) + 1 + static_cast<int>(i);
          if (panel.observed(n, t)) {
            recent[j * p + i] = panel.value(n, t);
          } else if (t < 1) {
            recent[j * p + i] = std::numeric_limits<double>::quiet_NaN();
          } else {
            const auto k = static_cast<std::size_t>(group.regime(t));
            recent[j * p + i] =
                predictive(chain.hypers[n].emission, stats[k].cells[j * width]).sample(rng);
          }
        }
      }
      std::vector<int> path;
      const NigStats empty;
      for (int h = 1; h <= horizon; ++h) {
        std::vector<double> weights;
        for (std::size_t k = 0; k <= stats.size(); ++k) {
          const bool fresh = k == stats.size();
          double w = fresh ? std::log(group.alpha()) : std::log(static_cast<double>(stats[k].count));
          for (std::size_t j = 0; j < members.size(); ++j) {
            for (std::size_t i = 1; i <= p; ++i) {
              if (std::isnan(recent[j * p + p - i])) continue;
              w += predictive_logpdf(view.hypers[members[j]].lags[i - 1],
                                     fresh ? empty : stats[k].cells[j * width + i],
                                     recent[j * p + p - i]);
            }
          }
          weights.push_back(w);
        }
        const std::size_t z = sample_log_categorical(weights, rng);
        if (z == stats.size()) stats.emplace_back(members.size(), p);
        path.push_back(static_cast<int>(z));
        for (std::size_t j = 0; j < members.size(); ++j) {
          const std::size_t n = members[j];
          NigStats* cells = &stats[z].cells[j * width];
          const double x = predictive(view.hypers[n].emission, cells[0]).sample(rng);
          cells[0].incorporate(x);
          for (std::size_t i = 1; i <= p; ++i) {
            if (!std::isnan(recent[j * p + p - i])) cells[i].incorporate(recent[j * p + p - i]);
          }
          if (p > 0) {
            std::rotate(recent.begin() + static_cast<std::ptrdiff_t>(j * p),
                        recent.begin() + static_cast<std::ptrdiff_t>(j * p + 1),
                        recent.begin() + static_cast<std::ptrdiff_t>(j * p + p));
            recent[j * p + p - 1] = x;
          }
          draw.values[n][static_cast<std::size_t>(h - 1)] = x;
        }
        ++stats[z].count;
      }
      draw.regimes.push_back(std::move(path));
    }
    result.draws.push_back(std::move(draw));
  }

  result.summary.assign(N, std::vector<Summary>(static_cast<std::size_t>(horizon)));
  for (std::size_t n = 0; n < N; ++n) {
    for (int h = 0; h < horizon; ++h) {
      std::vector<double> xs;
      for (const auto& d : result.draws) xs.push_back(d.values[n][static_cast<std::size_t>(h)]);
      result.summary[n][static_cast<std::size_t>(h)] = summarize(std::move(xs));
    }
  }
  return result;
}

namespace {

StudentT cell_predictive(const ChainState& chain, std::size_t n, int t) {
  const GroupModel& group = chain.groups[static_cast<std::size_t>(chain.assignments[n])];
  const auto& members = group.members();
  const std::size_t slot =
      static_cast<std::size_t>(std::lower_bound(members.begin(), members.end(), n) - members.begin());
  const auto k = static_cast<std::size_t>(group.regime(t));
  return predictive(chain.hypers[n].emission,
                    group.stats(k).cells[slot * (group.panel().window() + 1)]);
}

}  // namespace

std::vector<ImputedSeries> impute(const SampleSet& samples, std::size_t draws, std::uint64_t seed) {
  if (draws < 1) throw UsageError("number of draws must be at least 1");
  Rng rng = make_rng(seed, 0);
  std::vector<ImputedSeries> out;
  for (const auto& [n, t] : samples.panel->missing_cells()) {
    ImputedSeries cell{n, t, {}, {}};
    for (std::size_t r = 0; r < draws; ++r) {
      const std::size_t s = pick_chain(samples, rng);
      cell.draws.push_back(cell_predictive(samples.chains[s], n, t).sample(rng));
    }
    cell.summary = summarize(cell.draws);
    out.push_back(std::move(cell));
  }
  return out;
}

double imputation_mixture_mean(const SampleSet& samples, std::size_t n, int t) {
  double acc = 0.0;
  for (const auto& chain : samples.chains) acc += cell_predictive(chain, n, t).loc;
  return acc / static_cast<double>(samples.chains.size());
}

double dependence_probability(const SampleSet& samples, std::size_t i, std::size_t k) {
  if (i == k) return 1.0;
  std::size_t same = 0;
  for (const auto& chain : samples.chains) {
    if (chain.assignments.at(i) == chain.assignments.at(k)) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(samples.chains.size());
}

std::vector<std::vector<double>> dependence_matrix(const SampleSet& samples) {
  const std::size_t N = samples.panel->num_series();
  std::vector<std::vector<double>> matrix(N, std::vector<double>(N, 1.0));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = i + 1; k < N; ++k) {
      matrix[i][k] = matrix[k][i] = dependence_probability(samples, i, k);
    }
  }
  return matrix;
}

}  // namespace trcrp
