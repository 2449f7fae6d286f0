// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/model.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trcrp {

namespace {

// Incremental updates between full rebuilds of a group's statistics.
constexpr std::size_t kRebuildInterval = 10000;

}  // namespace

void incorporate_step(RegimeStats& stats, const Panel& panel,
                      std::span<const std::size_t> members, int t) {
  const std::size_t p = panel.window();
  for (std::size_t j = 0; j < members.size(); ++j) {
    const std::size_t n = members[j];
    NigStats* cell = &stats.cells[j * (p + 1)];
    if (panel.observed(n, t)) cell[0].incorporate(panel.value(n, t));
    for (std::size_t i = 1; i <= p; ++i) {
      const int s = t - static_cast<int>(i);
      if (panel.observed(n, s)) cell[i].incorporate(panel.value(n, s));
    }
  }
  ++stats.count;
}

void unincorporate_step(RegimeStats& stats, const Panel& panel,
                        std::span<const std::size_t> members, int t) {
  const std::size_t p = panel.window();
  for (std::size_t j = 0; j < members.size(); ++j) {
    const std::size_t n = members[j];
    NigStats* cell = &stats.cells[j * (p + 1)];
    if (panel.observed(n, t)) cell[0].unincorporate(panel.value(n, t));
    for (std::size_t i = 1; i <= p; ++i) {
      const int s = t - static_cast<int>(i);
      if (panel.observed(n, s)) cell[i].unincorporate(panel.value(n, s));
    }
  }
  if (stats.count == 0) throw std::logic_error("unincorporate_step on empty regime");
  --stats.count;
}

double step_cohesion(const RegimeStats& stats, const ModelView& view,
                     std::span<const std::size_t> members, int t) {
  const std::size_t p = view.panel.window();
  double acc = 0.0;
  for (std::size_t j = 0; j < members.size(); ++j) {
    const std::size_t n = members[j];
    const auto& lag_hypers = view.hypers[n].lags;
    const NigStats* cell = &stats.cells[j * (p + 1)];
    for (std::size_t i = 1; i <= p; ++i) {
      const int s = t - static_cast<int>(i);
      if (!view.panel.observed(n, s)) continue;
      acc += predictive_logpdf(lag_hypers[i - 1], cell[i], view.panel.value(n, s));
    }
  }
  return acc;
}

double step_emission(const RegimeStats& stats, const ModelView& view,
                     std::span<const std::size_t> members, int t) {
  const std::size_t p = view.panel.window();
  double acc = 0.0;
  for (std::size_t j = 0; j < members.size(); ++j) {
    const std::size_t n = members[j];
    if (!view.panel.observed(n, t)) continue;
    acc += predictive_logpdf(view.hypers[n].emission, stats.cells[j * (p + 1)],
                             view.panel.value(n, t));
  }
  return acc;
}

std::vector<double> crp_log_weights(std::span<const int> prefix, double alpha) {
  std::vector<std::size_t> counts;
  for (int k : prefix) {
    if (static_cast<std::size_t>(k) >= counts.size()) counts.resize(static_cast<std::size_t>(k) + 1);
    ++counts[static_cast<std::size_t>(k)];
  }
  std::vector<double> weights;
  weights.reserve(counts.size() + 1);
  for (std::size_t c : counts) {
    weights.push_back(c > 0 ? std::log(static_cast<double>(c)) : kNegInf);
  }
  weights.push_back(std::log(alpha));
  return weights;
}

std::vector<int> canonical_labels(std::span<const int> regimes) {
  std::vector<int> mapping;
  std::vector<int> out(regimes.begin(), regimes.end());
  int next = 0;
  for (int& k : out) {
    if (k < 0) continue;
    const auto idx = static_cast<std::size_t>(k);
    if (idx >= mapping.size()) mapping.resize(idx + 1, -1);
    if (mapping[idx] < 0) mapping[idx] = next++;
    k = mapping[idx];
  }
  return out;
}

GroupModel::GroupModel(const Panel& panel, std::vector<std::size_t> members, double alpha,
                       std::vector<int> regimes)
    : panel_(&panel), members_(std::move(members)), alpha_(alpha), regimes_(std::move(regimes)) {
  if (!(alpha_ > 0)) throw std::invalid_argument("CRP concentration must be positive");
  if (regimes_.size() != static_cast<std::size_t>(panel.num_steps())) {
    throw std::invalid_argument("regime sequence length must equal the number of steps");
  }
  for (int k : regimes_) {
    if (k < 0) throw std::invalid_argument("regime labels must be non-negative");
  }
  std::sort(members_.begin(), members_.end());
  regimes_ = canonical_labels(regimes_);
  stats_ = compute_stats();
}

void GroupModel::set_alpha(double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("CRP concentration must be positive");
  alpha_ = alpha;
  invalidate();
}

std::vector<RegimeStats> GroupModel::compute_stats() const {
  int max_label = -1;
  for (int k : regimes_) max_label = std::max(max_label, k);
  std::vector<RegimeStats> stats(static_cast<std::size_t>(max_label + 1),
                                 RegimeStats(members_.size(), panel_->window()));
  for (int t = 1; t <= num_steps(); ++t) {
    const int k = regime(t);
    if (k >= 0) incorporate_step(stats[static_cast<std::size_t>(k)], *panel_, members_, t);
  }
  return stats;
}

void GroupModel::unassign(int t) {
  const int k = regime(t);
  if (k < 0) throw std::logic_error("step is already unassigned");
  auto& stats = stats_[static_cast<std::size_t>(k)];
  unincorporate_step(stats, *panel_, members_, t);
  regimes_[static_cast<std::size_t>(t - 1)] = -1;
  if (stats.count == 0) {
    stats_.erase(stats_.begin() + k);
    for (int& z : regimes_) {
      if (z > k) --z;
    }
  }
  ++updates_since_rebuild_;
  invalidate();
}

void GroupModel::assign(int t, std::size_t k) {
  if (regime(t) >= 0) throw std::logic_error("step is already assigned");
  if (k > stats_.size()) throw std::out_of_range("regime label out of range");
  if (k == stats_.size()) stats_.emplace_back(members_.size(), panel_->window());
  incorporate_step(stats_[k], *panel_, members_, t);
  regimes_[static_cast<std::size_t>(t - 1)] = static_cast<int>(k);
  ++updates_since_rebuild_;
  canonicalize();
  if (updates_since_rebuild_ >= kRebuildInterval) rebuild();
  invalidate();
}

void GroupModel::canonicalize() {
  const std::vector<int> relabeled = canonical_labels(regimes_);
  if (relabeled == regimes_) return;
  std::vector<RegimeStats> permuted(stats_.size());
  std::vector<bool> placed(stats_.size(), false);
  for (std::size_t i = 0; i < regimes_.size(); ++i) {
    if (regimes_[i] < 0) continue;
    const auto target = static_cast<std::size_t>(relabeled[i]);
    if (placed[target]) continue;
    permuted[target] = std::move(stats_[static_cast<std::size_t>(regimes_[i])]);
    placed[target] = true;
  }
  stats_ = std::move(permuted);
  regimes_ = relabeled;
}

void GroupModel::set_members(std::vector<std::size_t> members) {
  std::sort(members.begin(), members.end());
  members_ = std::move(members);
  rebuild();
}

void GroupModel::rebuild() {
  stats_ = compute_stats();
  updates_since_rebuild_ = 0;
  invalidate();
}

double GroupModel::max_stats_error() const {
  const auto fresh = compute_stats();
  if (fresh.size() != stats_.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (fresh[k].count != stats_[k].count) return std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < fresh[k].cells.size(); ++c) {
      const auto& a = fresh[k].cells[c];
      const auto& b = stats_[k].cells[c];
      if (a.count != b.count) return std::numeric_limits<double>::infinity();
      err = std::max({err, std::abs(a.sum - b.sum), std::abs(a.sum_sq - b.sum_sq)});
    }
  }
  return err;
}

double GroupModel::loglik(std::span<const SeriesHypers> hypers) const {
  if (!cached_loglik_) {
    cached_loglik_ = partial_loglik(ModelView{*panel_, hypers}, members_, regimes_, alpha_);
  }
  return *cached_loglik_;
}

std::vector<StepTerms> sequence_terms(const ModelView& view, std::span<const std::size_t> members,
                                      std::span<const int> regimes, double alpha) {
  const std::size_t p = view.panel.window();
  int max_label = -1;
  for (int k : regimes) max_label = std::max(max_label, k);
  std::vector<RegimeStats> prefix(static_cast<std::size_t>(max_label + 1),
                                  RegimeStats(members.size(), p));
  const RegimeStats empty(members.size(), p);
  const double log_alpha = std::log(alpha);

  std::vector<StepTerms> terms(regimes.size());
  std::vector<double> weights;
  for (std::size_t idx = 0; idx < regimes.size(); ++idx) {
    const int t = static_cast<int>(idx) + 1;
    const auto k = static_cast<std::size_t>(regimes[idx]);
    weights.clear();
    const double fresh = log_alpha + step_cohesion(empty, view, members, t);
    weights.push_back(fresh);
    double chosen = fresh;
    for (std::size_t l = 0; l < prefix.size(); ++l) {
      if (prefix[l].count == 0) continue;
      const double w = std::log(static_cast<double>(prefix[l].count)) +
                       step_cohesion(prefix[l], view, members, t);
      weights.push_back(w);
      if (l == k) chosen = w;
    }
    terms[idx].log_b = -logsumexp(weights);
    terms[idx].log_weight = chosen;
    terms[idx].log_emission = step_emission(prefix[k], view, members, t);
    incorporate_step(prefix[k], view.panel, members, t);
  }
  return terms;
}

double partial_loglik(const ModelView& view, std::span<const std::size_t> members,
                      std::span<const int> regimes, double alpha) {
  if (members.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& term : sequence_terms(view, members, regimes, alpha)) {
    acc += term.log_b + term.log_weight + term.log_emission;
  }
  return acc;
}

namespace {

std::vector<RegimeStats> prefix_stats(const ModelView& view, const GroupModel& group, int t) {
  int max_label = -1;
  for (int s = 1; s < t; ++s) max_label = std::max(max_label, group.regime(s));
  std::vector<RegimeStats> prefix(static_cast<std::size_t>(max_label + 1),
                                  RegimeStats(group.members().size(), view.panel.window()));
  for (int s = 1; s < t; ++s) {
    incorporate_step(prefix[static_cast<std::size_t>(group.regime(s))], view.panel,
                     group.members(), s);
  }
  return prefix;
}

}  // namespace

std::vector<double> reweighted_log_weights(const ModelView& view, const GroupModel& group, int t) {
  const auto prefix = prefix_stats(view, group, t);
  auto weights = crp_log_weights(group.regimes().subspan(0, static_cast<std::size_t>(t - 1)),
                                 group.alpha());
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    weights[k] += step_cohesion(prefix[k], view, group.members(), t);
  }
  const RegimeStats empty(group.members().size(), view.panel.window());
  weights.back() += step_cohesion(empty, view, group.members(), t);
  return weights;
}

double log_normalizer_b(const ModelView& view, const GroupModel& group, int t) {
  return -logsumexp(reweighted_log_weights(view, group, t));
}

double log_predictive_q(const ModelView& view, const GroupModel& group, int t) {
  const auto prefix = prefix_stats(view, group, t);
  auto weights = reweighted_log_weights(view, group, t);
  const double log_b = -logsumexp(weights);
  const RegimeStats empty(group.members().size(), view.panel.window());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const RegimeStats& stats = k < prefix.size() ? prefix[k] : empty;
    weights[k] += step_emission(stats, view, group.members(), t);
  }
  return log_b + logsumexp(weights);
}

}  // namespace trcrp
