// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/smc.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trcrp/errors.hh"

namespace trcrp {

HistoryNode::~HistoryNode() {
  std::shared_ptr<const HistoryNode> next = std::move(parent);
  while (next && next.use_count() == 1) next = std::move(next->parent);
}

ParticleSet init_particles(const ModelView& view, std::vector<std::size_t> members, double alpha,
                           std::size_t num_particles) {
  if (num_particles == 0) throw std::invalid_argument("need at least one particle");
  if (!(alpha > 0)) throw std::invalid_argument("CRP concentration must be positive");
  const std::size_t p = view.panel.window();
  ParticleSet ps;
  std::sort(members.begin(), members.end());
  ps.members = std::move(members);
  ps.alpha = alpha;
  Particle seed;
  seed.recent.resize(ps.members.size() * p);
  for (std::size_t j = 0; j < ps.members.size(); ++j) {
    for (std::size_t i = 0; i < p; ++i) {
      const int t = static_cast<int>(i) + 1 - static_cast<int>(p);
      seed.recent[j * p + i] = view.panel.observed(ps.members[j], t)
                                   ? view.panel.value(ps.members[j], t)
                                   : std::numeric_limits<double>::quiet_NaN();
    }
  }
  ps.particles.assign(num_particles, seed);
  return ps;
}

void smc_step(const ModelView& view, ParticleSet& ps, Rng& rng) {
  const int t = ps.cursor + 1;
  if (t > view.panel.num_steps()) throw std::out_of_range("particle set already at the last step");
  const std::size_t p = view.panel.window();
  const std::size_t width = p + 1;
  const auto& members = ps.members;
  const double log_alpha = std::log(ps.alpha);
  const NigStats empty_cell;
  std::vector<double> base;
  std::vector<double> full;

  for (Particle& particle : ps.particles) {
    const std::size_t K = particle.stats.size();
    base.assign(K + 1, 0.0);
    full.assign(K + 1, 0.0);
    for (std::size_t k = 0; k <= K; ++k) {
      const bool fresh = k == K;
      double cohesion = 0.0;
      double emission = 0.0;
      for (std::size_t j = 0; j < members.size(); ++j) {
        const std::size_t n = members[j];
        const NigStats* cells = fresh ? nullptr : &particle.stats[k].cells[j * width];
        for (std::size_t i = 1; i <= p; ++i) {
          // Only unobserved prefix cells stay NaN; in-sample gaps are imputed.
          if (std::isnan(particle.recent[j * p + p - i])) continue;
          cohesion += predictive_logpdf(view.hypers[n].lags[i - 1], fresh ? empty_cell : cells[i],
                                        particle.recent[j * p + p - i]);
        }
        if (view.panel.observed(n, t)) {
          emission += predictive_logpdf(view.hypers[n].emission, fresh ? empty_cell : cells[0],
                                        view.panel.value(n, t));
        }
      }
      const double crp =
          fresh ? log_alpha : std::log(static_cast<double>(particle.stats[k].count));
      base[k] = crp + cohesion;
      full[k] = base[k] + emission;
    }
    particle.log_weight += logsumexp(full) - logsumexp(base);
    const std::size_t z = sample_log_categorical(full, rng);
    if (z == K) particle.stats.emplace_back(members.size(), p);
    RegimeStats& stats = particle.stats[z];

    auto node = std::make_shared<HistoryNode>();
    node->regime = static_cast<int>(z);
    node->parent = particle.history;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const std::size_t n = members[j];
      NigStats* cells = &stats.cells[j * width];
      double x;
      if (view.panel.observed(n, t)) {
        x = view.panel.value(n, t);
      } else {
        x = predictive(view.hypers[n].emission, cells[0]).sample(rng);
        node->imputed.push_back(x);
      }
      for (std::size_t i = 1; i <= p; ++i) {
        const double lag = particle.recent[j * p + p - i];
        if (!std::isnan(lag)) cells[i].incorporate(lag);
      }
      cells[0].incorporate(x);
      if (p > 0) {
        double* window = &particle.recent[j * p];
        std::rotate(window, window + 1, window + p);
        window[p - 1] = x;
      }
    }
    ++stats.count;
    particle.history = std::move(node);
  }
  ps.cursor = t;
}

double effective_sample_size(const ParticleSet& ps) {
  std::vector<double> logw;
  for (const auto& particle : ps.particles) logw.push_back(particle.log_weight);
  const auto w = normalize_log_weights(logw);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return 1.0 / sq;
}

namespace {

double log_mean_weight(const ParticleSet& ps) {
  std::vector<double> logw;
  for (const auto& particle : ps.particles) logw.push_back(particle.log_weight);
  return logsumexp(logw) - std::log(static_cast<double>(ps.particles.size()));
}

}  // namespace

bool maybe_resample(ParticleSet& ps, double threshold, Rng& rng) {
  const std::size_t J = ps.particles.size();
  std::vector<double> logw;
  for (const auto& particle : ps.particles) logw.push_back(particle.log_weight);
  const double total = logsumexp(logw);
  if (!std::isfinite(total)) {
    throw NumericalError("all particle weights vanished; rerun with more particles");
  }
  std::vector<double> cumulative(J);
  double acc = 0.0;
  double sq = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double w = std::exp(logw[j] - total);
    acc += w;
    sq += w * w;
    cumulative[j] = acc;
  }
  if (1.0 / sq >= threshold * static_cast<double>(J)) return false;

  ps.log_evidence += total - std::log(static_cast<double>(J));
  std::vector<Particle> drawn;
  drawn.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double u = uniform_open(rng) * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), J - 1);
    drawn.push_back(ps.particles[idx]);
    drawn.back().log_weight = 0.0;
  }
  ps.particles = std::move(drawn);
  ++ps.resamples;
  return true;
}

double log_evidence_estimate(const ParticleSet& ps) { return ps.log_evidence + log_mean_weight(ps); }

namespace {

// Completed values x^{members}_{1-p..cursor} of particle j, row per member.
std::vector<std::vector<double>> completed_values(const ModelView& view, const ParticleSet& ps,
                                                  std::size_t j, ParticlePath* path) {
  std::vector<const HistoryNode*> nodes;
  for (const HistoryNode* node = ps.particles[j].history.get(); node; node = node->parent.get()) {
    nodes.push_back(node);
  }
  std::reverse(nodes.begin(), nodes.end());
  const int p = static_cast<int>(view.panel.window());
  std::vector<std::vector<double>> rows(ps.members.size());
  for (std::size_t m = 0; m < ps.members.size(); ++m) {
    for (int t = 1 - p; t <= 0; ++t) {
      rows[m].push_back(view.panel.observed(ps.members[m], t) ? view.panel.value(ps.members[m], t)
                                                              : std::numeric_limits<double>::quiet_NaN());
    }
  }
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    const int t = static_cast<int>(idx) + 1;
    std::size_t next = 0;
    for (std::size_t m = 0; m < ps.members.size(); ++m) {
      const std::size_t n = ps.members[m];
      if (view.panel.observed(n, t)) {
        rows[m].push_back(view.panel.value(n, t));
      } else {
        const double x = nodes[idx]->imputed.at(next++);
        rows[m].push_back(x);
        if (path) path->imputed.push_back(ImputedCell{n, t, x});
      }
    }
    if (path) path->regimes.push_back(nodes[idx]->regime);
  }
  return rows;
}

}  // namespace

ParticlePath particle_path(const ModelView& view, const ParticleSet& ps, std::size_t j) {
  ParticlePath path;
  completed_values(view, ps, j, &path);
  return path;
}

double particle_stats_error(const ModelView& view, const ParticleSet& ps, std::size_t j) {
  ParticlePath path;
  const auto rows = completed_values(view, ps, j, &path);
  const std::size_t p = view.panel.window();
  const Particle& particle = ps.particles[j];
  std::vector<RegimeStats> fresh;
  for (std::size_t idx = 0; idx < path.regimes.size(); ++idx) {
    const auto k = static_cast<std::size_t>(path.regimes[idx]);
    if (k >= fresh.size()) fresh.resize(k + 1, RegimeStats(ps.members.size(), p));
    for (std::size_t m = 0; m < ps.members.size(); ++m) {
      for (std::size_t i = 0; i <= p; ++i) {
        const double x = rows[m][idx + p - i];
        if (!std::isnan(x)) fresh[k].cells[m * (p + 1) + i].incorporate(x);
      }
    }
    ++fresh[k].count;
  }
  if (fresh.size() != particle.stats.size()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (fresh[k].count != particle.stats[k].count) return std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < fresh[k].cells.size(); ++c) {
      const auto& a = fresh[k].cells[c];
      const auto& b = particle.stats[k].cells[c];
      if (a.count != b.count) return std::numeric_limits<double>::infinity();
      err = std::max({err, std::abs(a.sum - b.sum), std::abs(a.sum_sq - b.sum_sq)});
    }
  }
  return err;
}

SmcResult smc_block_sample(const ModelView& view, std::vector<std::size_t> members, double alpha,
                           const SmcConfig& config, Rng& rng) {
  ParticleSet ps = init_particles(view, std::move(members), alpha, config.particles);
  for (int t = 1; t <= view.panel.num_steps(); ++t) {
    smc_step(view, ps, rng);
    if (t < view.panel.num_steps()) maybe_resample(ps, config.ess_threshold, rng);
  }
  std::vector<double> logw;
  for (const auto& particle : ps.particles) logw.push_back(particle.log_weight);
  if (!std::isfinite(logsumexp(logw))) {
    throw NumericalError("all particle weights vanished; rerun with more particles");
  }
  const std::size_t j = sample_log_categorical(logw, rng);
  ParticlePath path = particle_path(view, ps, j);
  return SmcResult{std::move(path.regimes), std::move(path.imputed), log_evidence_estimate(ps),
                   ps.resamples};
}

}  // namespace trcrp
