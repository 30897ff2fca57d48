#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "noloco/latency.hpp"
#include "noloco/models.hpp"
#include "noloco/optimizers.hpp"
#include "noloco/routing.hpp"

namespace noloco {

enum class WorkloadKind { kQuadratic, kMlp };

struct WorkloadConfig {
  WorkloadKind kind = WorkloadKind::kQuadratic;
  // quadratic
  int dim = 8;
  double eig_min = 0.25;
  double eig_max = 2.0;
  double init_scale = 1.0;  // phi_0 = init_scale * ones
  // mlp
  int in_dim = 8;
  int out_dim = 4;
  int hidden_width = 32;
  int hidden_layers = 3;  // tanh layers; an identity output layer is appended
  int n_samples = 4096;
  int batch_size = 16;
  int val_samples = 128;
  // shared
  double noise_std = 0.1;
};

enum class RoutingMode { kRandom, kFixed };

struct RoutingConfig {
  RoutingMode mode = RoutingMode::kRandom;
  long resample_every = 1;  // inner steps between fresh permutations
};

struct ExperimentConfig {
  WorkloadConfig workload;
  int stages = 1;
  int replicas = 2;
  InnerOptConfig inner;
  OuterOptConfig outer;
  RoutingConfig routing;
  long steps = 2500;
  std::uint64_t seed = 1;
  long metrics_every = 10;
  std::string out;
  LatencyModel latency;  // simulated per-inner-step wall clock
};

/// Parse / validate; throws config_error naming the offending field.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

struct MetricsRecord {
  long step = 0;
  long outer_step = 0;
  std::vector<double> loss_per_replica;
  double val_loss = 0.0;
  double replica_std = 0.0;
  double lr = 0.0;
  double sim_time = 0.0;
};

/// The seeding discipline of an experiment: every random draw belongs to a
/// role-keyed stream derived from the config seed, never to a shared
/// sequence, so methods compared under one seed consume identical data and
/// identical per-worker noise. Exposed so external code can reproduce any
/// part of a run.
struct ExperimentStreams {
  static RngStream problem(std::uint64_t seed);
  static RngStream init(std::uint64_t seed);
  static RngStream data(std::uint64_t seed);
  static RngStream worker(std::uint64_t seed, int worker_id);
  static RngStream routing(std::uint64_t seed);
  static RngStream groups(std::uint64_t seed, int stage);
  static RngStream time(std::uint64_t seed, int worker_id);
};

/// Per-coordinate cross-replica standard deviation (population convention),
/// collapsed to its L2 norm over coordinates. Needs >= 2 replicas.
double replica_weight_std(const std::vector<Vector>& replica_params);

/// (a_t - b_t) / ref_t per step; positive means b converges faster.
/// Throws numeric_error where ref_t == 0.
std::vector<double> relative_convergence_diff(const std::vector<double>& a,
                                              const std::vector<double>& b,
                                              const std::vector<double>& ref);

/// Sample Pearson correlation. Throws for length < 3 or constant input.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// The experiment loop: shard batches, sample routes, forward/backward along
/// recorded paths, inner steps per worker, gossip / all-reduce outer steps on
/// the configured cadence. Fully deterministic given the config seed.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig cfg);
  /// Quadratic runs with an externally fixed problem and start point (Monte
  /// Carlo sweeps vary the seed while holding the problem constant).
  Trainer(ExperimentConfig cfg, QuadraticProblem problem, Vector phi0);
  ~Trainer();
  Trainer(Trainer&&) noexcept;
  Trainer& operator=(Trainer&&) noexcept;

  void step();                 // one inner step (plus outer step when due)
  void run_steps(long count);  // convenience loop
  void run();                  // cfg.steps total

  long current_step() const;
  long outer_steps_done() const;
  const ExperimentConfig& config() const;
  const PipelineTopology& topology() const;
  const std::vector<WorkerState>& workers() const;
  const WorkerState& worker(int stage, int replica) const;
  const std::vector<MetricsRecord>& metrics() const;

  const std::vector<double>& last_losses() const;
  double validation_loss() const;
  /// Cross-replica dispersion combined over stages (slow weights; live
  /// weights when no outer method is configured).
  double replica_std_combined() const;
  double sim_time() const;
  /// Gossip group of a worker at a given 1-based outer step index.
  std::vector<int> group_of(int worker_id, long outer_index) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Run and persist metrics (JSON lines plus a CSV sidecar at out + ".csv",
/// both written atomically). Returns the metrics path.
std::string run_experiment(const ExperimentConfig& cfg);

std::string metrics_to_jsonl(const std::vector<MetricsRecord>& records);
std::string metrics_to_csv(const std::vector<MetricsRecord>& records);
void write_file_atomic(const std::string& path, const std::string& contents);

struct MethodCurve {
  std::string method;
  std::vector<long> steps;
  std::vector<double> train_loss;  // mean over replicas
  std::vector<double> val_loss;
  std::vector<double> replica_std;
  std::vector<double> lr;
};

struct ComparisonReport {
  std::vector<MethodCurve> curves;  // noloco, diloco, sync-dp
  std::vector<double> rel_convergence_diff;  // (diloco - noloco) / sync-dp, validation loss
  double pearson_std_lr = 0.0;  // replica std vs inner lr on the gossip run
  double tree_time = 0.0;
  double pair_time = 0.0;
  double wallclock_ratio = 0.0;  // 0 when the world size does not permit the sim
};

/// Same data shards and inner-step streams for every method; only the outer
/// method (and its method-specific defaults, when the config left them unset)
/// differs. `json_text` keeps per-method defaulting available.
ComparisonReport run_comparison(const std::string& json_text);
std::string comparison_to_json(const ComparisonReport& report);

/// Patch `pointer` (JSON pointer or dotted path) with each value, rerun the
/// comparison, and report final losses per method.
struct SweepRow {
  double value = 0.0;
  std::vector<std::string> methods;
  std::vector<double> final_val_loss;
};
std::vector<SweepRow> run_sweep(const std::string& json_text, const std::string& param,
                                const std::vector<double>& values);
std::string sweep_to_json(const std::string& param, const std::vector<SweepRow>& rows);

/// The analytic counterpart of a quadratic experiment config: same problem
/// construction, lr, cadence and outer parameters.
struct AnalyzeRequest {
  ExperimentConfig experiment;
  long horizon = 0;  // outer steps; defaults to steps / interval
};
AnalyzeRequest parse_analyze_request(const std::string& json_text);
std::string analyze_to_json(const AnalyzeRequest& request);

/// Problem construction shared by the trainer and the analyze path.
QuadraticProblem build_quadratic_problem(const WorkloadConfig& workload, const RngStream& rng);
Vector quadratic_initial_point(const WorkloadConfig& workload);

}  // namespace noloco
