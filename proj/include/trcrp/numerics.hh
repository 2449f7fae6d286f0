// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace trcrp {

using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stream derivation rule: the generator for stream `s` of master seed `seed`
// is mt19937_64 seeded with seed_seq{lo32(seed), hi32(seed), lo32(s), hi32(s)}.
// Chain s of a fit uses stream s; predictive commands use stream 0.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

// Uniform draw on the open interval (0, 1) using 53 random bits.
double uniform_open(Rng& rng);

double logsumexp(std::span<const double> xs);

// Gumbel-max draw from unnormalized log weights. Entries equal to -inf are
// never selected; ties go to the smallest index.
std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng);

// Normalizes log weights into probabilities.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

// Log density of Gamma(shape=1, rate=1).
inline double log_gamma11(double x) { return x > 0 ? -x : kNegInf; }

// log of alpha^K prod_k (n_k - 1)! / prod_{i<n} (alpha + i), the probability
// of a partition with block sizes `counts` under CRP(alpha).
double crp_log_partition_mass(std::span<const std::size_t> counts, double alpha);

}  // namespace trcrp
