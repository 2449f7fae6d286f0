// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/hypers.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trcrp {

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0)) lo = kGridFloor;
  if (!(hi > lo)) hi = 100.0 * lo;
  std::vector<double> points(n);
  const double step = n > 1 ? (std::log(hi) - std::log(lo)) / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
  }
  points.front() = lo;
  if (n > 1) points.back() = hi;
  return points;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> points(n);
  const double step = n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) points[i] = lo + step * static_cast<double>(i);
  if (n > 1) points.back() = hi;
  return points;
}

const HyperGrid& SeriesGrids::component(int c) const {
  switch (c) {
    case 0: return m;
    case 1: return V;
    case 2: return a;
    case 3: return b;
  }
  throw std::out_of_range("hyper component must be in 0..3");
}

namespace {

HyperGrid log_grid(std::string rule, double lo, double hi) {
  HyperGrid grid{std::move(rule), lo, hi, logspace(lo, hi)};
  grid.lo = grid.points.front();
  grid.hi = grid.points.back();
  return grid;
}

}  // namespace

GridSet build_grids(const Panel& panel) {
  const double N = static_cast<double>(panel.num_series());
  const double T = static_cast<double>(panel.num_steps());
  GridSet grids;
  grids.alpha0 = log_grid("logspace(1/N, N)", 1.0 / N, N);
  grids.alpha = log_grid("logspace(1/T, T)", 1.0 / T, T);
  for (std::size_t n = 0; n < panel.num_series(); ++n) {
    const auto xs = panel.observed_values(n);
    double lo = 0.0;
    double hi = 0.0;
    double ssqdev = 0.0;
    if (!xs.empty()) {
      lo = *std::min_element(xs.begin(), xs.end());
      hi = *std::max_element(xs.begin(), xs.end());
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      for (double x : xs) ssqdev += (x - mean) * (x - mean);
    }
    SeriesGrids sg;
    sg.m = HyperGrid{"linspace(min-5, max+5)", lo - 5.0, hi + 5.0, linspace(lo - 5.0, hi + 5.0)};
    sg.V = log_grid("logspace(1/T, T)", 1.0 / T, T);
    sg.a = log_grid("logspace(ssqdev/100, ssqdev)", ssqdev / 100.0, ssqdev);
    sg.b = log_grid("logspace(1, T)", 1.0, T);
    grids.series.push_back(std::move(sg));
  }
  return grids;
}

nlohmann::json grids_to_json(const Panel& panel, const GridSet& grids) {
  auto encode = [](const HyperGrid& g) {
    return nlohmann::json{{"rule", g.rule}, {"lo", g.lo}, {"hi", g.hi}, {"points", g.points}};
  };
  nlohmann::json series = nlohmann::json::array();
  for (std::size_t n = 0; n < grids.series.size(); ++n) {
    const auto& sg = grids.series[n];
    series.push_back({{"name", panel.series_names()[n]},
                      {"m", encode(sg.m)},
                      {"V", encode(sg.V)},
                      {"a", encode(sg.a)},
                      {"b", encode(sg.b)}});
  }
  return {{"num_points", kGridSize},
          {"alpha0", encode(grids.alpha0)},
          {"alpha", encode(grids.alpha)},
          {"series", series}};
}

namespace {

double middle(const HyperGrid& grid) { return grid.points[grid.points.size() / 2]; }

}  // namespace

std::vector<SeriesHypers> initial_hypers(const Panel& panel, const GridSet& grids) {
  std::vector<SeriesHypers> hypers;
  for (const auto& sg : grids.series) {
    const NigHyper h{middle(sg.m), middle(sg.V), middle(sg.a), middle(sg.b)};
    hypers.push_back(SeriesHypers{h, std::vector<NigHyper>(panel.window(), h)});
  }
  return hypers;
}

double initial_alpha0(const GridSet& grids) { return middle(grids.alpha0); }
double initial_alpha(const GridSet& grids) { return middle(grids.alpha); }

const std::vector<double>& grid_points(const GridSet& grids, const HyperId& id) {
  switch (id.kind) {
    case HyperId::Kind::Alpha0: return grids.alpha0.points;
    case HyperId::Kind::Alpha: return grids.alpha.points;
    case HyperId::Kind::Emission:
    case HyperId::Kind::Lag: return grids.series.at(id.index).component(id.component).points;
  }
  throw std::logic_error("unknown hyperparameter kind");
}

namespace {

double& component_ref(NigHyper& h, int c) {
  switch (c) {
    case 0: return h.m;
    case 1: return h.V;
    case 2: return h.a;
    case 3: return h.b;
  }
  throw std::out_of_range("hyper component must be in 0..3");
}

NigHyper& nig_ref(ChainState& state, const HyperId& id) {
  auto& sh = state.hypers.at(id.index);
  return id.kind == HyperId::Kind::Emission ? sh.emission : sh.lags.at(id.lag - 1);
}

NigHyper with_component(NigHyper h, int c, double value) {
  component_ref(h, c) = value;
  return h;
}

std::size_t group_of(const ChainState& state, std::size_t n) {
  return static_cast<std::size_t>(state.assignments.at(n));
}

std::size_t member_slot(const GroupModel& group, std::size_t n) {
  const auto& members = group.members();
  return static_cast<std::size_t>(std::lower_bound(members.begin(), members.end(), n) -
                                  members.begin());
}

// Per-step reweighting terms of one group at its current hypers: for every
// t the CRP log weight and total cohesion of each candidate (occupied prefix
// regimes, then the new regime).
class CohesionTable {
 public:
  CohesionTable(const ModelView& view, const GroupModel& group) : view_(view), group_(group) {
    const std::size_t p = view.panel.window();
    const auto& members = group.members();
    const RegimeStats empty(members.size(), p);
    std::vector<RegimeStats> prefix;
    offsets_.push_back(0);
    for (int t = 1; t <= group.num_steps(); ++t) {
      for (const auto& stats : prefix) {
        counts_.push_back(static_cast<double>(stats.count));
        cohesion_.push_back(step_cohesion(stats, view, members, t));
      }
      counts_.push_back(-1.0);
      cohesion_.push_back(step_cohesion(empty, view, members, t));
      offsets_.push_back(counts_.size());
      const auto k = static_cast<std::size_t>(group.regime(t));
      chosen_.push_back(k < prefix.size() ? k : prefix.size());
      if (k == prefix.size()) prefix.emplace_back(members.size(), p);
      incorporate_step(prefix[k], view.panel, members, t);
    }
  }

  // Sum over t of log b_t + log CRP + cohesion as a function of alpha.
  double alpha_terms(double alpha) const {
    const double log_alpha = std::log(alpha);
    double acc = 0.0;
    std::vector<double> w;
    for (std::size_t idx = 0; idx + 1 < offsets_.size(); ++idx) {
      w.clear();
      for (std::size_t e = offsets_[idx]; e < offsets_[idx + 1]; ++e) w.push_back(weight(e, log_alpha));
      acc += w[chosen_[idx]] - logsumexp(w);
    }
    return acc;
  }

  // Same sum with `deltas` added to the stored cohesion entries.
  double terms_with(const std::vector<double>& deltas) const {
    const double log_alpha = std::log(group_.alpha());
    double acc = 0.0;
    std::vector<double> w;
    for (std::size_t idx = 0; idx + 1 < offsets_.size(); ++idx) {
      w.clear();
      for (std::size_t e = offsets_[idx]; e < offsets_[idx + 1]; ++e) {
        w.push_back(weight(e, log_alpha) + deltas[e]);
      }
      acc += w[chosen_[idx]] - logsumexp(w);
    }
    return acc;
  }

  // Per-entry log predictive of the (slot, lag) cohesion factor under
  // `hyper`, 0 where the lagged value is unobserved.
  std::vector<double> lag_logpdfs(std::size_t slot, std::size_t lag, const NigHyper& hyper,
                                  std::size_t* evals) const {
    const std::size_t n = group_.members()[slot];
    std::vector<double> out(cohesion_.size(), 0.0);
    std::vector<NigStats> cells;
    const NigStats empty;
    PredictiveEvaluator eval(hyper);
    for (std::size_t idx = 0; idx + 1 < offsets_.size(); ++idx) {
      const int t = static_cast<int>(idx) + 1;
      const int s = t - static_cast<int>(lag);
      if (view_.panel.observed(n, s)) {
        const double x = view_.panel.value(n, s);
        for (std::size_t e = offsets_[idx]; e < offsets_[idx + 1]; ++e) {
          const std::size_t k = e - offsets_[idx];
          out[e] = eval.logpdf(k < cells.size() ? cells[k] : empty, x);
          if (evals) *evals += 1;
        }
      }
      const std::size_t k = chosen_[idx];
      if (k == cells.size()) cells.emplace_back();
      if (view_.panel.observed(n, s)) cells[k].incorporate(view_.panel.value(n, s));
    }
    return out;
  }

  // Folds a changed (slot, lag) hyper into the stored cohesion totals.
  void update_lag(std::size_t slot, std::size_t lag, const NigHyper& current, const NigHyper& hyper,
                  std::size_t* evals) {
    const auto before = lag_logpdfs(slot, lag, current, evals);
    const auto after = lag_logpdfs(slot, lag, hyper, evals);
    for (std::size_t e = 0; e < cohesion_.size(); ++e) cohesion_[e] += after[e] - before[e];
  }

 private:
  double weight(std::size_t e, double log_alpha) const {
    return (counts_[e] < 0 ? log_alpha : std::log(counts_[e])) + cohesion_[e];
  }

  const ModelView& view_;
  const GroupModel& group_;
  std::vector<std::size_t> offsets_;
  std::vector<double> counts_;
  std::vector<double> cohesion_;
  std::vector<std::size_t> chosen_;
};

double emission_terms(const GroupModel& group, std::size_t slot, const NigHyper& hyper,
                      std::size_t* evals) {
  const std::size_t width = group.panel().window() + 1;
  double acc = 0.0;
  for (std::size_t k = 0; k < group.num_regimes(); ++k) {
    acc += log_marginal_likelihood(hyper, group.stats(k).cells[slot * width]);
    if (evals) *evals += 1;
  }
  return acc;
}

std::vector<double> weights_with_table(const ChainState& state, const GridSet& grids,
                                       const HyperId& id, const CohesionTable* table,
                                       HyperCounters* counters) {
  const auto& points = grid_points(grids, id);
  std::vector<double> weights(points.size());
  switch (id.kind) {
    case HyperId::Kind::Alpha0: {
      const auto sizes = state.group_sizes();
      for (std::size_t g = 0; g < points.size(); ++g) {
        weights[g] = log_gamma11(points[g]) + crp_log_partition_mass(sizes, points[g]);
      }
      break;
    }
    case HyperId::Kind::Alpha: {
      for (std::size_t g = 0; g < points.size(); ++g) {
        weights[g] = log_gamma11(points[g]) + table->alpha_terms(points[g]);
      }
      break;
    }
    case HyperId::Kind::Emission: {
      const GroupModel& group = state.groups[group_of(state, id.index)];
      const std::size_t slot = member_slot(group, id.index);
      std::size_t* evals = counters ? &counters->emission_evals[id.index] : nullptr;
      const NigHyper current = state.hypers[id.index].emission;
      for (std::size_t g = 0; g < points.size(); ++g) {
        weights[g] = emission_terms(group, slot, with_component(current, id.component, points[g]), evals);
      }
      break;
    }
    case HyperId::Kind::Lag: {
      const GroupModel& group = state.groups[group_of(state, id.index)];
      const std::size_t slot = member_slot(group, id.index);
      std::size_t* evals = counters ? &counters->lag_evals[id.index] : nullptr;
      const NigHyper current = state.hypers[id.index].lags.at(id.lag - 1);
      const auto base = table->lag_logpdfs(slot, id.lag, current, evals);
      std::vector<double> deltas(base.size());
      for (std::size_t g = 0; g < points.size(); ++g) {
        const auto vals = table->lag_logpdfs(slot, id.lag, with_component(current, id.component, points[g]), evals);
        for (std::size_t e = 0; e < vals.size(); ++e) deltas[e] = vals[e] - base[e];
        weights[g] = table->terms_with(deltas);
      }
      break;
    }
  }
  return weights;
}

void prepare_counters(const ChainState& state, HyperCounters* counters) {
  if (!counters) return;
  counters->emission_evals.resize(state.hypers.size(), 0);
  counters->lag_evals.resize(state.hypers.size(), 0);
}

}  // namespace

double hyper_value(const ChainState& state, const HyperId& id) {
  switch (id.kind) {
    case HyperId::Kind::Alpha0: return state.alpha0;
    case HyperId::Kind::Alpha: return state.groups.at(id.index).alpha();
    case HyperId::Kind::Emission:
    case HyperId::Kind::Lag: {
      NigHyper h = id.kind == HyperId::Kind::Emission
                       ? state.hypers.at(id.index).emission
                       : state.hypers.at(id.index).lags.at(id.lag - 1);
      return component_ref(h, id.component);
    }
  }
  throw std::logic_error("unknown hyperparameter kind");
}

void set_hyper_value(ChainState& state, const HyperId& id, double value) {
  switch (id.kind) {
    case HyperId::Kind::Alpha0:
      state.alpha0 = value;
      return;
    case HyperId::Kind::Alpha:
      state.groups.at(id.index).set_alpha(value);
      return;
    case HyperId::Kind::Emission:
    case HyperId::Kind::Lag:
      component_ref(nig_ref(state, id), id.component) = value;
      state.groups[group_of(state, id.index)].invalidate();
      return;
  }
}

std::vector<double> conditional_log_weights(const Panel& panel, const ChainState& state,
                                            const GridSet& grids, const HyperId& id,
                                            HyperCounters* counters) {
  prepare_counters(state, counters);
  if (id.kind == HyperId::Kind::Alpha || id.kind == HyperId::Kind::Lag) {
    const ModelView view = state.view(panel);
    const std::size_t g = id.kind == HyperId::Kind::Alpha ? id.index : group_of(state, id.index);
    const CohesionTable table(view, state.groups.at(g));
    return weights_with_table(state, grids, id, &table, counters);
  }
  return weights_with_table(state, grids, id, nullptr, counters);
}

double gibbs_hyper(const Panel& panel, ChainState& state, const GridSet& grids, const HyperId& id,
                   HyperCounters* counters) {
  const auto weights = conditional_log_weights(panel, state, grids, id, counters);
  const double value = grid_points(grids, id)[sample_log_categorical(weights, state.rng)];
  set_hyper_value(state, id, value);
  return value;
}

void hyper_sweep(const Panel& panel, ChainState& state, const GridSet& grids,
                 HyperCounters* counters, const HyperFreeze& freeze) {
  prepare_counters(state, counters);
  const ModelView view = state.view(panel);
  auto draw = [&](const HyperId& id, const CohesionTable* table) {
    const auto weights = weights_with_table(state, grids, id, table, counters);
    return grid_points(grids, id)[sample_log_categorical(weights, state.rng)];
  };

  if (!freeze.alpha0) {
    const HyperId id{HyperId::Kind::Alpha0};
    set_hyper_value(state, id, draw(id, nullptr));
  }
  for (std::size_t m = 0; m < state.groups.size(); ++m) {
    GroupModel& group = state.groups[m];
    CohesionTable table(view, group);
    if (!freeze.alpha) group.set_alpha(draw(HyperId{HyperId::Kind::Alpha, m}, &table));
    if (freeze.nig) continue;
    for (std::size_t slot = 0; slot < group.members().size(); ++slot) {
      const std::size_t n = group.members()[slot];
      for (int c = 0; c < 4; ++c) {
        const HyperId id{HyperId::Kind::Emission, n, 0, c};
        set_hyper_value(state, id, draw(id, &table));
      }
      for (std::size_t i = 1; i <= panel.window(); ++i) {
        for (int c = 0; c < 4; ++c) {
          const HyperId id{HyperId::Kind::Lag, n, i, c};
          const NigHyper before = state.hypers[n].lags[i - 1];
          set_hyper_value(state, id, draw(id, &table));
          const NigHyper after = state.hypers[n].lags[i - 1];
          if (!(after == before)) {
            table.update_lag(slot, i, before, after, counters ? &counters->lag_evals[n] : nullptr);
          }
        }
      }
    }
    group.invalidate();
  }
}

}  // namespace trcrp
