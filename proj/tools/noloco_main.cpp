// Command-line front end: train / analyze / latency / compare / sweep.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "noloco/error.hpp"
#include "noloco/harness.hpp"
#include "noloco/latency.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw noloco::config_error("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void emit(const GlobalOptions& options, const std::string& payload) {
  if (!options.out_path.empty()) {
    noloco::write_file_atomic(options.out_path, payload);
    if (!options.quiet) std::cout << options.out_path << std::endl;
  } else {
    std::cout << payload;
  }
}

void add_common(CLI::App* cmd, GlobalOptions& options, bool config_required) {
  auto* config = cmd->add_option("--config", options.config_path, "experiment config (JSON)");
  if (config_required) config->required();
  cmd->add_option("--seed", options.seed, "override the config seed")
      ->each([&options](const std::string&) { options.seed_set = true; });
  cmd->add_option("--out", options.out_path, "output path (default: config `out` or stdout)");
  cmd->add_flag("--quiet", options.quiet, "suppress progress output");
}

std::string with_seed_override(std::string text, const GlobalOptions& options) {
  if (!options.seed_set) return text;
  try {
    nlohmann::json root = nlohmann::json::parse(text);
    root["seed"] = options.seed;
    return root.dump();
  } catch (const nlohmann::json::parse_error& err) {
    throw noloco::config_error(std::string("config: invalid JSON: ") + err.what());
  }
}

int run_train(const GlobalOptions& options) {
  noloco::ExperimentConfig cfg = noloco::parse_experiment_config(slurp(options.config_path));
  if (options.seed_set) cfg.seed = options.seed;
  if (!options.out_path.empty()) cfg.out = options.out_path;
  const std::string path = noloco::run_experiment(cfg);
  if (!options.quiet) std::cout << path << std::endl;
  return 0;
}

int run_analyze(const GlobalOptions& options) {
  noloco::AnalyzeRequest request = noloco::parse_analyze_request(slurp(options.config_path));
  if (options.seed_set) request.experiment.seed = options.seed;
  emit(options, noloco::analyze_to_json(request));
  return 0;
}

int run_compare(const GlobalOptions& options) {
  const std::string text = with_seed_override(slurp(options.config_path), options);
  const noloco::ComparisonReport report = noloco::run_comparison(text);
  emit(options, noloco::comparison_to_json(report));
  return 0;
}

int run_sweep(const GlobalOptions& options, const std::string& param,
              const std::vector<double>& values) {
  const std::string text = with_seed_override(slurp(options.config_path), options);
  const auto rows = noloco::run_sweep(text, param, values);
  emit(options, noloco::sweep_to_json(param, rows));
  return 0;
}

struct LatencyOptions {
  int world = 1024;
  int inner_steps = 100;
  double mu = 1.0;
  double sigma2 = 0.5;
  int outer_steps = 500;
  int trials = 2000;
  std::uint64_t seed = 1;
  std::string mode = "wallclock";
};

int run_latency(const GlobalOptions& options, const LatencyOptions& latency) {
  nlohmann::ordered_json row;
  row["world"] = latency.world;
  row["mu"] = latency.mu;
  row["sigma2"] = latency.sigma2;
  if (latency.mode == "wallclock") {
    noloco::FleetSpec fleet;
    fleet.world = latency.world;
    fleet.inner_steps = latency.inner_steps;
    fleet.outer_steps = latency.outer_steps;
    fleet.step_latency = {latency.mu, latency.sigma2};
    const noloco::WallclockResult result =
        noloco::wallclock_compare(fleet, noloco::RngStream(latency.seed));
    row["inner_steps"] = latency.inner_steps;
    row["outer_steps"] = latency.outer_steps;
    row["diloco_total"] = result.diloco_total;
    row["noloco_total"] = result.noloco_total;
    row["ratio"] = result.ratio;
  } else if (latency.mode == "reduce") {
    const noloco::LatencyModel model{latency.mu, latency.sigma2};
    const noloco::ReduceRatioResult result = noloco::mc_reduce_ratio(
        latency.world, model, latency.trials, noloco::RngStream(latency.seed));
    row["trials"] = latency.trials;
    row["tree_mean"] = result.tree_mean;
    row["pair_mean"] = result.pair_mean;
    row["ratio"] = result.ratio;
    row["std_error"] = result.std_error;
    row["expected_pair_max"] = noloco::expected_pair_max(latency.mu, latency.sigma2);
  } else {
    throw noloco::config_error("latency: --mode must be \"wallclock\" or \"reduce\"");
  }
  emit(options, row.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale simulator for low-communication decentralized training"};
  app.require_subcommand(1);

  GlobalOptions options;
  LatencyOptions latency;
  std::string sweep_param;
  std::vector<double> sweep_values;

  CLI::App* train = app.add_subcommand("train", "run one training experiment");
  add_common(train, options, true);

  CLI::App* analyze = app.add_subcommand("analyze", "closed-form predictions for a config");
  add_common(analyze, options, true);

  CLI::App* compare =
      app.add_subcommand("compare", "run noloco / diloco / sync-dp on identical data");
  add_common(compare, options, true);

  CLI::App* sweep = app.add_subcommand("sweep", "rerun the comparison over a parameter grid");
  add_common(sweep, options, true);
  sweep->add_option("--param", sweep_param, "config field (dotted path, e.g. batch_size)")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');

  CLI::App* latency_cmd = app.add_subcommand("latency", "communication latency models");
  add_common(latency_cmd, options, false);
  latency_cmd->add_option("--world", latency.world, "worker count (power of two)");
  latency_cmd->add_option("--inner-steps", latency.inner_steps, "inner steps per outer step");
  latency_cmd->add_option("--mu", latency.mu, "log-latency mean");
  latency_cmd->add_option("--sigma2", latency.sigma2, "log-latency variance");
  latency_cmd->add_option("--outer-steps", latency.outer_steps, "outer steps to simulate");
  latency_cmd->add_option("--trials", latency.trials, "Monte-Carlo trials (reduce mode)");
  latency_cmd->add_option("--mode", latency.mode, "wallclock | reduce");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return run_train(options);
    if (analyze->parsed()) return run_analyze(options);
    if (compare->parsed()) return run_compare(options);
    if (sweep->parsed()) return run_sweep(options, sweep_param, sweep_values);
    if (latency_cmd->parsed()) {
      if (options.seed_set) latency.seed = options.seed;
      return run_latency(options, latency);
    }
  } catch (const noloco::config_error& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return 2;
  }
  return 1;
}
