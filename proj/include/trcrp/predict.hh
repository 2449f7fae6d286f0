// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "trcrp/chain.hh"
#include "trcrp/panel.hh"

namespace trcrp {

struct ChainRecord {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int burnin = 0;
  int sweeps = 0;
  std::string schedule;
};

// S posterior samples over one shared panel.
struct SampleSet {
  std::shared_ptr<const Panel> panel;
  nlohmann::json config;
  std::string config_hash;
  std::vector<ChainState> chains;
  std::vector<ChainRecord> records;
};

inline constexpr int kSampleSetVersion = 1;

nlohmann::json panel_to_json(const Panel& panel);
Panel panel_from_json(const nlohmann::json& j);

nlohmann::json sampleset_to_json(const SampleSet& samples);
// Throws DataError on a schema-version mismatch or inconsistent content.
SampleSet sampleset_from_json(const nlohmann::json& j);

struct ForecastDraw {
  std::size_t chain = 0;
  // values[n][h-1]: series n at T+h.
  std::vector<std::vector<double>> values;
  // regimes[m][h-1]: the shared regime of group m at T+h.
  std::vector<std::vector<int>> regimes;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

Summary summarize(std::vector<double> xs);

struct ForecastResult {
  int horizon = 0;
  std::vector<ForecastDraw> draws;
  // summary[n][h-1].
  std::vector<std::vector<Summary>> summary;
};

// Ancestral simulation of T+1..T+h, one chain per draw picked uniformly.
ForecastResult forecast(const SampleSet& samples, int horizon, std::size_t draws, std::uint64_t seed);

struct ImputedSeries {
  std::size_t series;
  int time;
  std::vector<double> draws;
  Summary summary;
};

// Draws for every unobserved in-sample cell; empty for a complete panel.
std::vector<ImputedSeries> impute(const SampleSet& samples, std::size_t draws, std::uint64_t seed);

// Mean of the imputation mixture for cell (n, t), averaged over chains.
double imputation_mixture_mean(const SampleSet& samples, std::size_t n, int t);

// Fraction of samples placing i and k in the same group; 1 when i == k.
double dependence_probability(const SampleSet& samples, std::size_t i, std::size_t k);
std::vector<std::vector<double>> dependence_matrix(const SampleSet& samples);

}  // namespace trcrp
