// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/numerics.hh"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trcrp {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (hi == kNegInf) return kNegInf;
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  std::size_t best = 0;
  double best_score = kNegInf;
  bool found = false;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    // Draw the noise for every entry so the stream advances identically
    // whatever the weights are.
    const double gumbel = -std::log(-std::log(uniform_open(rng)));
    if (log_weights[i] == kNegInf) continue;
    const double score = log_weights[i] + gumbel;
    if (!found || score > best_score) {
      best = i;
      best_score = score;
      found = true;
    }
  }
  return best;
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  const double total = logsumexp(log_weights);
  std::vector<double> probs(log_weights.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(log_weights[i] - total);
  }
  return probs;
}

double crp_log_partition_mass(std::span<const std::size_t> counts, double alpha) {
  std::size_t total = 0;
  double acc = 0.0;
  for (std::size_t n : counts) {
    if (n == 0) continue;
    acc += std::log(alpha) + std::lgamma(static_cast<double>(n));
    total += n;
  }
  acc -= std::lgamma(alpha + static_cast<double>(total)) - std::lgamma(alpha);
  return acc;
}

}  // namespace trcrp
