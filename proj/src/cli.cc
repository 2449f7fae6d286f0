// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/cli.hh"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "trcrp/errors.hh"
#include "trcrp/fit.hh"
#include "trcrp/hypers.hh"
#include "trcrp/predict.hh"
#include "trcrp/simulate.hh"

namespace trcrp {

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
  if (!f) throw DataError("failed writing " + path);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

nlohmann::json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"sd", s.sd},   {"q05", s.q05}, {"q25", s.q25},
          {"q50", s.q50},   {"q75", s.q75}, {"q95", s.q95}};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      xs.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return xs;
}

struct FitArgs {
  std::string data;
  std::string out;
  RunConfig config;
  double alpha = 0.0;
  double alpha0 = 0.0;
  std::string nig;
  bool no_smc_init = false;
  bool heuristic_only = false;
};

struct PredictArgs {
  std::string samples;
  std::string out;
  int horizon = 1;
  std::size_t draws = 1000;
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::size_t series = 1;
  int steps = 100;
  std::size_t window = 1;
  std::uint64_t seed = 0;
  bool hierarchical = false;
  double alpha = 0.0;
  double alpha0 = 0.0;
  std::string assignments;
  std::string nig;
  std::string out;
};

struct GridArgs {
  std::string data;
  std::size_t window = 10;
  std::string out;
};

std::optional<NigHyper> parse_nig(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto xs = parse_list(text);
  if (xs.size() != 4) throw UsageError("hypers take four values m,V,a,b");
  NigHyper h{xs[0], xs[1], xs[2], xs[3]};
  if (!h.valid()) throw UsageError("hypers need V, a, b > 0");
  return h;
}

int cmd_fit(FitArgs& args, std::ostream& out) {
  RunConfig config = args.config;
  if (args.alpha > 0) config.alpha = args.alpha;
  if (args.alpha0 > 0) config.alpha0 = args.alpha0;
  config.nig = parse_nig(args.nig);
  config.smc_init = !args.no_smc_init;
  config.full_mh = !args.heuristic_only;
  config.validate();
  auto panel = std::make_shared<const Panel>(load_csv(args.data, config.window));
  const FitResult result = fit(panel, config);
  write_file(args.out, sampleset_to_json(result.samples).dump(1) + "\n");
  write_file(args.out + ".provenance.json", provenance_json(result, config).dump(1) + "\n");
  out << "wrote " << result.samples.chains.size() << " chains to " << args.out << " (config "
      << result.samples.config_hash << ")\n";
  return kExitOk;
}

std::string predict_hash(const SampleSet& samples, const std::string& command, const PredictArgs& a) {
  return fnv1a_hex(samples.config_hash + "|" + command + "|" + std::to_string(a.horizon) + "|" +
                   std::to_string(a.draws) + "|" + std::to_string(a.seed));
}

int cmd_forecast(const PredictArgs& args, std::ostream& out) {
  const SampleSet samples = sampleset_from_json(read_json(args.samples));
  const ForecastResult result = forecast(samples, args.horizon, args.draws, args.seed);
  const Panel& panel = *samples.panel;
  const std::string hash = predict_hash(samples, "forecast", args);
  std::ostringstream csv;
  csv << "# config_hash=" << hash << "\n" << "series,time,draw,value\n";
  for (std::size_t r = 0; r < result.draws.size(); ++r) {
    for (std::size_t n = 0; n < panel.num_series(); ++n) {
      for (int h = 1; h <= result.horizon; ++h) {
        csv << panel.series_names()[n] << ',' << panel.num_steps() + h << ',' << r << ','
            << format_double(result.draws[r].values[n][static_cast<std::size_t>(h - 1)]) << '\n';
      }
    }
  }
  write_file(args.out, csv.str());
  nlohmann::json series = nlohmann::json::array();
  for (std::size_t n = 0; n < panel.num_series(); ++n) {
    nlohmann::json steps = nlohmann::json::array();
    for (int h = 1; h <= result.horizon; ++h) {
      auto s = summary_json(result.summary[n][static_cast<std::size_t>(h - 1)]);
      s["time"] = panel.num_steps() + h;
      steps.push_back(std::move(s));
    }
    series.push_back({{"name", panel.series_names()[n]}, {"steps", steps}});
  }
  const nlohmann::json summary = {{"config_hash", hash},
                                  {"sampleset_config_hash", samples.config_hash},
                                  {"horizon", result.horizon},
                                  {"draws", result.draws.size()},
                                  {"series", series}};
  write_file(args.out + ".summary.json", summary.dump(1) + "\n");
  out << "wrote " << result.draws.size() << " forecast draws to " << args.out << "\n";
  return kExitOk;
}

int cmd_impute(const PredictArgs& args, std::ostream& out) {
  const SampleSet samples = sampleset_from_json(read_json(args.samples));
  const auto cells = impute(samples, args.draws, args.seed);
  const Panel& panel = *samples.panel;
  const std::string hash = predict_hash(samples, "impute", args);
  std::ostringstream csv;
  csv << "# config_hash=" << hash << "\n" << "series,time,draw,value\n";
  nlohmann::json summary_cells = nlohmann::json::array();
  for (const auto& cell : cells) {
    for (std::size_t r = 0; r < cell.draws.size(); ++r) {
      csv << panel.series_names()[cell.series] << ',' << panel.label(cell.time) << ',' << r << ','
          << format_double(cell.draws[r]) << '\n';
    }
    auto s = summary_json(cell.summary);
    s["series"] = panel.series_names()[cell.series];
    s["time"] = panel.label(cell.time);
    summary_cells.push_back(std::move(s));
  }
  write_file(args.out, csv.str());
  const nlohmann::json summary = {{"config_hash", hash},
                                  {"sampleset_config_hash", samples.config_hash},
                                  {"draws", args.draws},
                                  {"cells", summary_cells}};
  write_file(args.out + ".summary.json", summary.dump(1) + "\n");
  out << "imputed " << cells.size() << " cells into " << args.out << "\n";
  return kExitOk;
}

int cmd_depprob(const PredictArgs& args, std::ostream& out) {
  const SampleSet samples = sampleset_from_json(read_json(args.samples));
  const auto matrix = dependence_matrix(samples);
  const auto& names = samples.panel->series_names();
  std::ostringstream csv;
  csv << "# config_hash=" << fnv1a_hex(samples.config_hash + "|depprob") << "\n" << "series";
  for (const auto& name : names) csv << ',' << name;
  csv << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    csv << names[i];
    for (double x : matrix[i]) csv << ',' << format_double(x);
    csv << '\n';
  }
  write_file(args.out, csv.str());
  out << "wrote " << names.size() << "x" << names.size() << " dependence matrix to " << args.out << "\n";
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  SimulationConfig config;
  config.num_series = args.series;
  config.num_steps = args.steps;
  config.window = args.window;
  config.seed = args.seed;
  config.hierarchical = args.hierarchical;
  if (args.alpha > 0) config.alpha = args.alpha;
  if (args.alpha0 > 0) config.alpha0 = args.alpha0;
  if (!args.assignments.empty()) {
    for (double c : parse_list(args.assignments)) {
      if (c < 0 || c != std::floor(c)) throw UsageError("assignments must be non-negative integers");
      config.assignments.push_back(static_cast<int>(c));
    }
    if (config.assignments.size() != args.series) {
      throw UsageError("--assignments needs one label per series");
    }
  }
  if (const auto nig = parse_nig(args.nig)) {
    config.hypers.assign(args.series, SeriesHypers{*nig, std::vector<NigHyper>(args.window, *nig)});
  }
  const Simulation sim = simulate(config);
  nlohmann::json latent = latent_to_json(sim);
  const std::string hash = fnv1a_hex(latent.dump() + panel_to_json(sim.panel).dump());
  latent["config_hash"] = hash;
  std::ostringstream csv;
  write_csv(csv, sim.panel, "config_hash=" + hash);
  write_file(args.out, csv.str());
  write_file(args.out + ".latent.json", latent.dump(1) + "\n");
  out << "simulated " << args.series << " series x " << args.steps << " steps into " << args.out << "\n";
  return kExitOk;
}

int cmd_inspect_grids(const GridArgs& args, std::ostream& out) {
  const Panel panel = load_csv(args.data, args.window);
  const std::string text = grids_to_json(panel, build_grids(panel)).dump(1) + "\n";
  if (args.out.empty()) {
    out << text;
  } else {
    write_file(args.out, text);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporally-reweighted CRP mixtures for multivariate time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "trcrp 1.0.0");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Run S posterior chains and write a sample set");
  fit_cmd->add_option("--data", fit_args.data, "CSV panel (first column: time label)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit_args.out, "Sample set JSON path")->required();
  fit_cmd->add_option("--window", fit_args.config.window, "Lag window p")->capture_default_str();
  fit_cmd->add_option("--chains", fit_args.config.chains, "Number of chains S")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--sweeps", fit_args.config.sweeps, "Sweeps after burn-in")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--burnin", fit_args.config.burnin, "Burn-in iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--particles", fit_args.config.particles, "SMC particles J")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_args.config.seed, "Master seed")->capture_default_str();
  fit_cmd->add_option("--threads", fit_args.config.threads, "Worker threads (0: all cores)")->capture_default_str();
  fit_cmd->add_flag("--deterministic", fit_args.config.deterministic, "Run chains sequentially");
  fit_cmd->add_flag("--hierarchical", fit_args.config.hierarchical, "Cluster series with an outer CRP");
  fit_cmd->add_option("--heuristic-sweeps", fit_args.config.heuristic_sweeps, "Leading always-accept iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--hyper-cadence", fit_args.config.hyper_cadence, "Hyper sweep every k iterations (0: fixed)")->capture_default_str()->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--ess-threshold", fit_args.config.ess_threshold, "SMC resampling threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_flag("--shuffle", fit_args.config.shuffle, "Visit time steps in random order");
  fit_cmd->add_flag("--no-smc-init", fit_args.no_smc_init, "Initialize z from the prior instead of SMC");
  fit_cmd->add_flag("--heuristic-only", fit_args.heuristic_only, "Never compute acceptance ratios");
  fit_cmd->add_option("--alpha", fit_args.alpha, "Fix every group's CRP concentration")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--alpha0", fit_args.alpha0, "Fix the outer CRP concentration")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--hypers", fit_args.nig, "Fix all Normal-InverseGamma hypers to m,V,a,b");

  PredictArgs fc_args;
  auto* fc_cmd = app.add_subcommand("forecast", "Sample future trajectories");
  fc_cmd->add_option("--samples", fc_args.samples, "Sample set JSON")->required()->check(CLI::ExistingFile);
  fc_cmd->add_option("--horizon", fc_args.horizon, "Steps ahead")->required()->check(CLI::PositiveNumber);
  fc_cmd->add_option("--draws", fc_args.draws, "Number of draws")->capture_default_str()->check(CLI::PositiveNumber);
  fc_cmd->add_option("--seed", fc_args.seed, "Seed")->capture_default_str();
  fc_cmd->add_option("--out", fc_args.out, "Output CSV")->required();

  PredictArgs im_args;
  auto* im_cmd = app.add_subcommand("impute", "Sample every missing cell");
  im_cmd->add_option("--samples", im_args.samples, "Sample set JSON")->required()->check(CLI::ExistingFile);
  im_cmd->add_option("--draws", im_args.draws, "Draws per cell")->capture_default_str()->check(CLI::PositiveNumber);
  im_cmd->add_option("--seed", im_args.seed, "Seed")->capture_default_str();
  im_cmd->add_option("--out", im_args.out, "Output CSV")->required();

  PredictArgs dp_args;
  auto* dp_cmd = app.add_subcommand("depprob", "Pairwise dependence probabilities");
  dp_cmd->add_option("--samples", dp_args.samples, "Sample set JSON")->required()->check(CLI::ExistingFile);
  dp_cmd->add_option("--out", dp_args.out, "Output CSV matrix")->required();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Forward-simulate a panel");
  sim_cmd->add_option("--series", sim_args.series, "Number of series")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--steps", sim_args.steps, "Number of steps T")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--window", sim_args.window, "Lag window p")->capture_default_str();
  sim_cmd->add_option("--seed", sim_args.seed, "Seed")->capture_default_str();
  sim_cmd->add_flag("--hierarchical", sim_args.hierarchical, "Draw an outer partition");
  sim_cmd->add_option("--alpha", sim_args.alpha, "Fixed CRP concentration")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--alpha0", sim_args.alpha0, "Fixed outer concentration")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--assignments", sim_args.assignments, "Planted outer labels, comma separated");
  sim_cmd->add_option("--hypers", sim_args.nig, "Normal-InverseGamma hypers m,V,a,b");
  sim_cmd->add_option("--out", sim_args.out, "Output CSV")->required();

  GridArgs grid_args;
  auto* grid_cmd = app.add_subcommand("inspect-grids", "Print the hyperparameter grids");
  grid_cmd->add_option("--data", grid_args.data, "CSV panel")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--window", grid_args.window, "Lag window p")->capture_default_str();
  grid_cmd->add_option("--out", grid_args.out, "Output JSON (stdout when absent)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_args, out);
    if (fc_cmd->parsed()) return cmd_forecast(fc_args, out);
    if (im_cmd->parsed()) return cmd_impute(im_args, out);
    if (dp_cmd->parsed()) return cmd_depprob(dp_args, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim_args, out);
    if (grid_cmd->parsed()) return cmd_inspect_grids(grid_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace trcrp
