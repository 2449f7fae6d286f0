// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/conjugate.hh"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trcrp {

void NigStats::unincorporate(double x) {
  if (count == 0) throw std::logic_error("unincorporate on empty NigStats");
  --count;
  if (count == 0) {
    sum = 0.0;
    sum_sq = 0.0;
    return;
  }
  sum -= x;
  sum_sq -= x * x;
}

double StudentT::logpdf(double x) const {
  const double z = (x - loc) * (x - loc) / (dof * scale_sq);
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi * scale_sq) - 0.5 * (dof + 1.0) * std::log1p(z);
}

double StudentT::sample(Rng& rng) const {
  std::student_t_distribution<double> dist(dof);
  return loc + std::sqrt(scale_sq) * dist(rng);
}

NigHyper posterior_params(const NigHyper& hyper, const NigStats& stats) {
  if (stats.count == 0) return hyper;
  const double n = static_cast<double>(stats.count);
  const double mean = stats.sum / n;
  NigHyper post;
  post.V = 1.0 / (1.0 / hyper.V + n);
  post.m = post.V * (hyper.m / hyper.V + stats.sum);
  post.a = hyper.a + 0.5 * n;
  // b + (m^2/V + sum x^2 - m'^2/V')/2, rearranged to avoid cancellation.
  const double ssd = std::max(0.0, stats.sum_sq - stats.sum * mean);
  const double shift = mean - hyper.m;
  post.b = hyper.b + 0.5 * (ssd + n / (1.0 + n * hyper.V) * shift * shift);
  return post;
}

StudentT predictive(const NigHyper& hyper, const NigStats& stats) {
  const NigHyper post = posterior_params(hyper, stats);
  return StudentT{2.0 * post.a, post.m, post.b * (1.0 + post.V) / post.a};
}

double predictive_logpdf(const NigHyper& hyper, const NigStats& stats, double x) {
  return predictive(hyper, stats).logpdf(x);
}

double PredictiveEvaluator::logpdf(const NigStats& stats, double x) {
  const NigHyper post = posterior_params(hyper_, stats);
  const double dof = 2.0 * post.a;
  const double scale_sq = post.b * (1.0 + post.V) / post.a;
  while (log_norm_.size() <= stats.count) {
    const double d = 2.0 * hyper_.a + static_cast<double>(log_norm_.size());
    log_norm_.push_back(std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d));
  }
  const double z = (x - post.m) * (x - post.m) / (dof * scale_sq);
  return log_norm_[stats.count] - 0.5 * std::log(dof * std::numbers::pi * scale_sq) -
         0.5 * (dof + 1.0) * std::log1p(z);
}

double log_marginal_likelihood(const NigHyper& hyper, const NigStats& stats) {
  if (stats.count == 0) return 0.0;
  const NigHyper post = posterior_params(hyper, stats);
  const double n = static_cast<double>(stats.count);
  return std::lgamma(post.a) - std::lgamma(hyper.a) + hyper.a * std::log(hyper.b) -
         post.a * std::log(post.b) + 0.5 * (std::log(post.V) - std::log(hyper.V)) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double cohesion_log_g(const LagVector& lag, std::span<const NigStats> per_lag_stats,
                      std::span<const NigHyper> per_lag_hyper) {
  double acc = 0.0;
  for (std::size_t i = 1; i <= lag.lags.size(); ++i) {
    if (!lag.lag_is_observed(i)) continue;
    acc += predictive_logpdf(per_lag_hyper[i - 1], per_lag_stats[i - 1], lag.lag(i));
  }
  return acc;
}

}  // namespace trcrp
