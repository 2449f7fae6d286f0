// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "trcrp/conjugate.hh"
#include "trcrp/panel.hh"

namespace trcrp {

// Per-series hyperparameters: lambda_F for the emission and lambda_G,i for
// each lag i = 1..p (lags[i-1]).
struct SeriesHypers {
  NigHyper emission;
  std::vector<NigHyper> lags;

  bool operator==(const SeriesHypers&) const = default;
};

// Data plus the per-series hyperparameters of one chain. Cheap to copy.
struct ModelView {
  const Panel& panel;
  std::span<const SeriesHypers> hypers;
};

// Statistics of one regime over a list of member series. For member j,
// cells[j*(p+1)] is the emission cell and cells[j*(p+1)+i] the lag-i cell.
// Only observed values enter a cell.
struct RegimeStats {
  std::size_t count = 0;
  std::vector<NigStats> cells;

  RegimeStats() = default;
  RegimeStats(std::size_t num_members, std::size_t window)
      : cells(num_members * (window + 1)) {}
};

void incorporate_step(RegimeStats& stats, const Panel& panel,
                      std::span<const std::size_t> members, int t);
void unincorporate_step(RegimeStats& stats, const Panel& panel,
                        std::span<const std::size_t> members, int t);

// log G: sum over members and observed lags of the lag predictives.
double step_cohesion(const RegimeStats& stats, const ModelView& view,
                     std::span<const std::size_t> members, int t);
// Sum over members observed at t of the emission predictive.
double step_emission(const RegimeStats& stats, const ModelView& view,
                     std::span<const std::size_t> members, int t);

// Unnormalized CRP log weights after a prefix in first-appearance labelling:
// log n_k for k = 0..max(prefix), then log alpha for the new regime.
std::vector<double> crp_log_weights(std::span<const int> prefix, double alpha);

// Relabels a sequence so labels are 0,1,2,... in order of first appearance.
// Negative entries (unassigned) are left alone.
std::vector<int> canonical_labels(std::span<const int> regimes);

// The TRCRP mixture of one group: shared regime sequence z_{1:T}, CRP
// concentration and the full-data regime statistics D_{Tk}, D'_{Tk} of its
// member series. Labels are kept contiguous and in first-appearance order.
class GroupModel {
 public:
  GroupModel(const Panel& panel, std::vector<std::size_t> members, double alpha,
             std::vector<int> regimes);

  const Panel& panel() const { return *panel_; }
  const std::vector<std::size_t>& members() const { return members_; }
  double alpha() const { return alpha_; }
  void set_alpha(double alpha);

  int num_steps() const { return static_cast<int>(regimes_.size()); }
  std::span<const int> regimes() const { return regimes_; }
  int regime(int t) const { return regimes_[static_cast<std::size_t>(t - 1)]; }
  std::size_t num_regimes() const { return stats_.size(); }
  std::size_t count(std::size_t k) const { return stats_[k].count; }
  const RegimeStats& stats(std::size_t k) const { return stats_[k]; }

  // Removes step t from its regime (regime(t) becomes -1). An emptied regime
  // is deleted and the labels above it shift down by one.
  void unassign(int t);
  // Puts an unassigned step into regime k; k == num_regimes() opens a new
  // regime. Labels are then restored to first-appearance order.
  void assign(int t, std::size_t k);

  void set_members(std::vector<std::size_t> members);
  // Recomputes every statistic from scratch.
  void rebuild();
  // Largest absolute difference between maintained and recomputed stats.
  double max_stats_error() const;

  // Cached L^m(z, x^{members}); cleared by every mutation. Callers changing
  // hyperparameters of a member series must call invalidate().
  double loglik(std::span<const SeriesHypers> hypers) const;
  void invalidate() const { cached_loglik_.reset(); }
  bool has_cached_loglik() const { return cached_loglik_.has_value(); }

 private:
  std::vector<RegimeStats> compute_stats() const;
  void canonicalize();

  const Panel* panel_;
  std::vector<std::size_t> members_;
  double alpha_;
  std::vector<int> regimes_;
  std::vector<RegimeStats> stats_;
  std::size_t updates_since_rebuild_ = 0;
  mutable std::optional<double> cached_loglik_;
};

// Per-step terms of the sequential factorization of one group:
// log b_t, log(n_{t z_t} G_{z_t}) (or log(alpha G) for a new regime) and the
// observed emission log predictive. Prefix statistics only.
struct StepTerms {
  double log_b = 0.0;
  double log_weight = 0.0;
  double log_emission = 0.0;
};

std::vector<StepTerms> sequence_terms(const ModelView& view, std::span<const std::size_t> members,
                                      std::span<const int> regimes, double alpha);

// L^m(z, x^B) = sum_t [log b_t + log CRP + cohesion + emission]. Defined as
// 0 for an empty member set: a group without series is absent from the joint.
double partial_loglik(const ModelView& view, std::span<const std::size_t> members,
                      std::span<const int> regimes, double alpha);

// Reweighted log weights at step t (CRP x cohesion), over regimes
// 0..max(z_{1:t-1}) and the new regime last. Uses prefix statistics.
std::vector<double> reweighted_log_weights(const ModelView& view, const GroupModel& group, int t);

// log b_t = -logsumexp(reweighted_log_weights).
double log_normalizer_b(const ModelView& view, const GroupModel& group, int t);

// log q_t: predictive of the observed data at t with z_t summed out.
double log_predictive_q(const ModelView& view, const GroupModel& group, int t);

}  // namespace trcrp
