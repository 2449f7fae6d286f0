// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trcrp/numerics.hh"
#include "trcrp/panel.hh"

namespace trcrp {

// Normal-InverseGamma hyperparameters: mu | s2 ~ N(m, s2 V), s2 ~ IG(a, b).
struct NigHyper {
  double m = 0.0;
  double V = 1.0;
  double a = 1.0;
  double b = 1.0;

  bool valid() const { return V > 0 && a > 0 && b > 0; }
  bool operator==(const NigHyper&) const = default;
};

// Sufficient statistics (count, sum, sum of squares) of one data cell.
struct NigStats {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void incorporate(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }

  // Throws std::logic_error on empty stats. Resets exactly to zero when the
  // last datum leaves.
  void unincorporate(double x);

  void merge(const NigStats& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }

  bool operator==(const NigStats&) const = default;
};

// Location-scale Student-T with `dof` degrees of freedom.
struct StudentT {
  double dof;
  double loc;
  double scale_sq;

  double logpdf(double x) const;
  double sample(Rng& rng) const;
};

NigHyper posterior_params(const NigHyper& hyper, const NigStats& stats);

// Collapsed predictive T_{2a'}(m', b'(1+V')/a').
StudentT predictive(const NigHyper& hyper, const NigStats& stats);

double predictive_logpdf(const NigHyper& hyper, const NigStats& stats, double x);

// predictive_logpdf for one fixed hyper, with the count-dependent log-gamma
// terms cached across calls.
class PredictiveEvaluator {
 public:
  explicit PredictiveEvaluator(const NigHyper& hyper) : hyper_(hyper) {}
  double logpdf(const NigStats& stats, double x);

 private:
  NigHyper hyper_;
  std::vector<double> log_norm_;
};

// log p(data) of the cell with (mu, s2) integrated out; equals the sum of
// sequential predictive log densities in any order.
double log_marginal_likelihood(const NigHyper& hyper, const NigStats& stats);

// Sum over observed lags i = 1..p of predictive_logpdf(hyper_i, stats_i,
// x_{t-i}); the log of the cohesion G. per_lag_stats[i-1] summarizes lag i.
double cohesion_log_g(const LagVector& lag, std::span<const NigStats> per_lag_stats,
                      std::span<const NigHyper> per_lag_hyper);

}  // namespace trcrp
