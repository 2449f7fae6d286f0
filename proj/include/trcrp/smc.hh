// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "trcrp/model.hh"
#include "trcrp/numerics.hh"

namespace trcrp {

// Persistent per-particle history so that resampling copies are O(1) in t.
struct HistoryNode {
  int regime = 0;
  // Values simulated for members unobserved at this step, in member order.
  std::vector<double> imputed;
  // Mutable so the destructor can unlink long chains iteratively.
  mutable std::shared_ptr<const HistoryNode> parent;

  HistoryNode() = default;
  HistoryNode(const HistoryNode&) = delete;
  HistoryNode& operator=(const HistoryNode&) = delete;
  ~HistoryNode();
};

struct Particle {
  // Statistics over the particle's completed data (observed plus imputed).
  std::vector<RegimeStats> stats;
  // Last p completed values of each member, oldest first.
  std::vector<double> recent;
  std::shared_ptr<const HistoryNode> history;
  double log_weight = 0.0;
};

struct ParticleSet {
  std::vector<std::size_t> members;
  double alpha = 1.0;
  int cursor = 0;
  std::vector<Particle> particles;
  // Running log marginal-likelihood estimate folded in at each resampling.
  double log_evidence = 0.0;
  std::size_t resamples = 0;
};

struct SmcConfig {
  std::size_t particles = 64;
  // Resample when ESS < threshold * J.
  double ess_threshold = 0.5;
};

ParticleSet init_particles(const ModelView& view, std::vector<std::size_t> members, double alpha,
                           std::size_t num_particles);

// Advances every particle from cursor t-1 to t: samples z_t, multiplies the
// weight by q_t and imputes the unobserved cells at t.
void smc_step(const ModelView& view, ParticleSet& ps, Rng& rng);

double effective_sample_size(const ParticleSet& ps);

// Multinomial resampling when the ESS falls below threshold * J. Throws
// NumericalError when no particle has positive weight.
bool maybe_resample(ParticleSet& ps, double threshold, Rng& rng);

// log of the marginal-likelihood estimate so far.
double log_evidence_estimate(const ParticleSet& ps);

struct ImputedCell {
  std::size_t series;
  int time;
  double value;
};

struct ParticlePath {
  std::vector<int> regimes;
  std::vector<ImputedCell> imputed;
};

ParticlePath particle_path(const ModelView& view, const ParticleSet& ps, std::size_t j);

// Largest discrepancy between a particle's maintained statistics and a
// recompute over its completed data.
double particle_stats_error(const ModelView& view, const ParticleSet& ps, std::size_t j);

struct SmcResult {
  std::vector<int> regimes;
  std::vector<ImputedCell> imputed;
  double log_evidence;
  std::size_t resamples;
};

// Runs t = 1..T and returns one particle drawn by final weight.
SmcResult smc_block_sample(const ModelView& view, std::vector<std::size_t> members, double alpha,
                           const SmcConfig& config, Rng& rng);

}  // namespace trcrp
