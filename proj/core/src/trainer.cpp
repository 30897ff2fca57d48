#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "harness_internal.hpp"
#include "noloco/error.hpp"

namespace noloco {

RngStream ExperimentStreams::problem(std::uint64_t seed) {
  return RngStream(seed).derive(detail::kTagProblem);
}
RngStream ExperimentStreams::init(std::uint64_t seed) {
  return RngStream(seed).derive(detail::kTagInit);
}
RngStream ExperimentStreams::data(std::uint64_t seed) {
  return RngStream(seed).derive(detail::kTagData);
}
RngStream ExperimentStreams::worker(std::uint64_t seed, int worker_id) {
  return RngStream(seed).derive(detail::kTagWorker).derive(static_cast<std::uint64_t>(worker_id));
}
RngStream ExperimentStreams::routing(std::uint64_t seed) {
  return RngStream(seed).derive(detail::kTagRouting);
}
RngStream ExperimentStreams::groups(std::uint64_t seed, int stage) {
  return RngStream(seed).derive(detail::kTagGroups).derive(static_cast<std::uint64_t>(stage));
}
RngStream ExperimentStreams::time(std::uint64_t seed, int worker_id) {
  return RngStream(seed).derive(detail::kTagTime).derive(static_cast<std::uint64_t>(worker_id));
}

struct Trainer::Impl {
  ExperimentConfig cfg;
  PipelineTopology topo;

  // quadratic workload
  std::optional<QuadraticProblem> quad;
  Vector quad_phi0;

  // mlp workload
  std::optional<StagedMLP> net;
  std::optional<RegressionTask> task;
  Batch val_batch;

  std::vector<WorkerState> workers;
  std::vector<double> clocks;
  std::vector<RngStream> time_rngs;
  RngStream routing_stream;
  RngStream groups_stream;

  long step_count = 0;
  long outer_count = 0;
  double last_lr = 0.0;
  std::vector<double> last_losses;
  std::vector<MetricsRecord> records;

  void init_workers(const std::vector<Vector>& stage_inits) {
    routing_stream = ExperimentStreams::routing(cfg.seed);
    groups_stream = RngStream(cfg.seed).derive(detail::kTagGroups);
    for (int s = 0; s < topo.num_stages; ++s) {
      for (int r = 0; r < topo.replicas; ++r) {
        const int id = topo.worker_id(s, r);
        workers.push_back(make_worker_state(id, stage_inits[static_cast<std::size_t>(s)],
                                            ExperimentStreams::worker(cfg.seed, id)));
        time_rngs.push_back(ExperimentStreams::time(cfg.seed, id));
      }
    }
    clocks.assign(workers.size(), 0.0);
    last_losses.assign(static_cast<std::size_t>(topo.replicas), 0.0);
  }

  void setup() {
    topo.num_stages = cfg.stages;
    topo.replicas = cfg.replicas;
    if (cfg.workload.kind == WorkloadKind::kQuadratic) {
      if (!quad) {
        quad = build_quadratic_problem(cfg.workload, ExperimentStreams::problem(cfg.seed));
        quad_phi0 = quadratic_initial_point(cfg.workload);
      }
      init_workers({quad_phi0});
    } else {
      net = make_staged_mlp(cfg.workload.in_dim, cfg.workload.hidden_width,
                            cfg.workload.hidden_layers, cfg.workload.out_dim, cfg.stages);
      RngStream init_rng = ExperimentStreams::init(cfg.seed);
      const Vector full_init = init_mlp_params(*net, init_rng);
      task.emplace(cfg.workload.n_samples, cfg.workload.noise_std, *net,
                   ExperimentStreams::data(cfg.seed));
      val_batch = task->validation(cfg.workload.val_samples);
      std::vector<Vector> stage_inits;
      for (int s = 0; s < cfg.stages; ++s)
        stage_inits.push_back(slice_stage_params(*net, s, full_init));
      init_workers(stage_inits);
    }
  }

  RoutePlan plan_for_step(long step) const {
    if (cfg.routing.mode == RoutingMode::kFixed) return fixed_route_plan(topo, step);
    return sample_route_plan(topo, step / cfg.routing.resample_every, routing_stream);
  }

  void compute_gradients(std::vector<Vector>& grads) {
    if (cfg.workload.kind == WorkloadKind::kQuadratic) {
      for (int r = 0; r < topo.replicas; ++r) {
        WorkerState& w = workers[static_cast<std::size_t>(topo.worker_id(0, r))];
        const Vector c = quad->noise_factor * standard_normal_vector(quad->dim(), w.rng);
        const Vector diff = w.theta - c;
        const Vector grad = quad->a * diff;
        last_losses[static_cast<std::size_t>(r)] = 0.5 * diff.dot(grad);
        grads[static_cast<std::size_t>(w.worker_id)] = grad;
      }
      return;
    }

    const RoutePlan plan = plan_for_step(step_count);
    for (int r0 = 0; r0 < topo.replicas; ++r0) {
      const Batch batch =
          task->batch(r0, topo.replicas, step_count, cfg.workload.batch_size);
      PathRecord record;
      record.microbatch = r0;
      std::vector<StageActivations> caches(static_cast<std::size_t>(topo.num_stages));

      Matrix x = batch.inputs;
      int replica = r0;
      for (int s = 0; s < topo.num_stages; ++s) {
        if (s > 0) replica = route_forward(plan, s - 1, replica);
        record.replicas.push_back(replica);
        const WorkerState& w = workers[static_cast<std::size_t>(topo.worker_id(s, replica))];
        StageForward fwd = mlp_forward_stage(*net, s, w.theta, x);
        caches[static_cast<std::size_t>(s)] = std::move(fwd.cache);
        x = std::move(fwd.output);
      }
      last_losses[static_cast<std::size_t>(r0)] = mse_loss(x, batch.targets);

      Matrix upstream = mse_grad(x, batch.targets);
      int rep = record.replicas.back();
      for (int s = topo.num_stages - 1; s >= 0; --s) {
        const int id = topo.worker_id(s, rep);
        const WorkerState& w = workers[static_cast<std::size_t>(id)];
        StageBackward bwd =
            mlp_backward_stage(*net, s, w.theta, caches[static_cast<std::size_t>(s)], upstream);
        if (grads[static_cast<std::size_t>(id)].size() != 0)
          throw state_error("trainer: a worker received two microbatches in one step");
        grads[static_cast<std::size_t>(id)] = std::move(bwd.param_grads);
        if (s > 0) {
          upstream = std::move(bwd.input_grad);
          rep = route_backward(record, s);
        }
      }
    }
  }

  void barrier(const std::vector<int>& ids) {
    double latest = 0.0;
    for (int id : ids) latest = std::max(latest, clocks[static_cast<std::size_t>(id)]);
    for (int id : ids) clocks[static_cast<std::size_t>(id)] = latest;
  }

  void global_barrier() {
    const double latest = *std::max_element(clocks.begin(), clocks.end());
    std::fill(clocks.begin(), clocks.end(), latest);
  }

  void outer_update() {
    const long outer_index = step_count / cfg.outer.interval;
    for (int s = 0; s < topo.num_stages; ++s) {
      const std::vector<int> ids = topo.stage_workers(s);
      if (cfg.outer.method == OuterMethod::kNoloco) {
        const GroupAssignment assignment =
            sample_groups(ids, cfg.outer.group_size, outer_index,
                          groups_stream.derive(static_cast<std::uint64_t>(s)));
        for (const std::vector<int>& group : assignment.groups) {
          std::vector<WorkerState*> members;
          for (int id : group) members.push_back(&workers[static_cast<std::size_t>(id)]);
          noloco_outer_step(std::move(members), cfg.outer);
          barrier(group);
        }
      } else {
        std::vector<WorkerState*> members;
        for (int id : ids) members.push_back(&workers[static_cast<std::size_t>(id)]);
        diloco_outer_step(std::move(members), cfg.outer);
      }
    }
    if (cfg.outer.method == OuterMethod::kDiloco) global_barrier();
    ++outer_count;
  }

  void do_step() {
    std::vector<Vector> grads(workers.size());
    compute_gradients(grads);
    last_lr = scheduled_lr(cfg.inner.schedule, cfg.inner.lr, step_count);

    if (cfg.outer.method == OuterMethod::kSyncDp) {
      for (int s = 0; s < topo.num_stages; ++s) {
        std::vector<WorkerState*> members;
        std::vector<Vector> stage_grads;
        for (int id : topo.stage_workers(s)) {
          members.push_back(&workers[static_cast<std::size_t>(id)]);
          stage_grads.push_back(std::move(grads[static_cast<std::size_t>(id)]));
        }
        sync_dp_step(std::move(members), stage_grads, cfg.inner, step_count);
      }
    } else {
      for (WorkerState& w : workers)
        inner_step(w, grads[static_cast<std::size_t>(w.worker_id)], cfg.inner, step_count);
    }

    for (std::size_t i = 0; i < workers.size(); ++i)
      clocks[i] += time_rngs[i].lognormal(cfg.latency.mu, cfg.latency.sigma2);
    if (cfg.outer.method == OuterMethod::kSyncDp) global_barrier();

    ++step_count;
    const bool outer_due = (cfg.outer.method == OuterMethod::kNoloco ||
                            cfg.outer.method == OuterMethod::kDiloco) &&
                           step_count % cfg.outer.interval == 0;
    if (outer_due) outer_update();

    if (step_count % cfg.metrics_every == 0 || step_count == cfg.steps) record_metrics();
  }

  double validation_loss() const {
    double total = 0.0;
    if (cfg.workload.kind == WorkloadKind::kQuadratic) {
      for (int r = 0; r < topo.replicas; ++r) {
        const WorkerState& w = workers[static_cast<std::size_t>(topo.worker_id(0, r))];
        total += 0.5 * w.theta.dot(quad->a * w.theta);
      }
      return total / topo.replicas;
    }
    for (int r = 0; r < topo.replicas; ++r) {
      Matrix x = val_batch.inputs;
      for (int s = 0; s < topo.num_stages; ++s) {
        const WorkerState& w = workers[static_cast<std::size_t>(topo.worker_id(s, r))];
        x = mlp_forward_stage(*net, s, w.theta, x).output;
      }
      total += mse_loss(x, val_batch.targets);
    }
    return total / topo.replicas;
  }

  double replica_std_combined() const {
    if (topo.replicas < 2) return 0.0;
    const bool use_phi = cfg.outer.method != OuterMethod::kNone;
    double sum_sq = 0.0;
    for (int s = 0; s < topo.num_stages; ++s) {
      std::vector<Vector> params;
      params.reserve(static_cast<std::size_t>(topo.replicas));
      for (int r = 0; r < topo.replicas; ++r) {
        const WorkerState& w = workers[static_cast<std::size_t>(topo.worker_id(s, r))];
        params.push_back(use_phi ? w.phi : w.theta);
      }
      const double stage_std = replica_weight_std(params);
      sum_sq += stage_std * stage_std;
    }
    return std::sqrt(sum_sq);
  }

  void record_metrics() {
    MetricsRecord record;
    record.step = step_count;
    record.outer_step = outer_count;
    record.loss_per_replica = last_losses;
    record.val_loss = validation_loss();
    record.replica_std = replica_std_combined();
    record.lr = last_lr;
    record.sim_time = *std::max_element(clocks.begin(), clocks.end());
    records.push_back(std::move(record));
  }
};

Trainer::Trainer(ExperimentConfig cfg) : impl_(std::make_unique<Impl>()) {
  validate_config(cfg);
  impl_->cfg = std::move(cfg);
  impl_->setup();
}

Trainer::Trainer(ExperimentConfig cfg, QuadraticProblem problem, Vector phi0)
    : impl_(std::make_unique<Impl>()) {
  if (cfg.workload.kind != WorkloadKind::kQuadratic)
    throw config_error("config: workload: injected problems require the quadratic workload");
  cfg.workload.dim = problem.dim();
  validate_config(cfg);
  if (phi0.size() != problem.dim())
    throw shape_error("Trainer: phi0 dimension does not match the problem");
  impl_->cfg = std::move(cfg);
  impl_->quad = std::move(problem);
  impl_->quad_phi0 = std::move(phi0);
  impl_->setup();
}

Trainer::~Trainer() = default;
Trainer::Trainer(Trainer&&) noexcept = default;
Trainer& Trainer::operator=(Trainer&&) noexcept = default;

void Trainer::step() { impl_->do_step(); }

void Trainer::run_steps(long count) {
  for (long i = 0; i < count; ++i) impl_->do_step();
}

void Trainer::run() {
  while (impl_->step_count < impl_->cfg.steps) impl_->do_step();
}

long Trainer::current_step() const { return impl_->step_count; }
long Trainer::outer_steps_done() const { return impl_->outer_count; }
const ExperimentConfig& Trainer::config() const { return impl_->cfg; }
const PipelineTopology& Trainer::topology() const { return impl_->topo; }
const std::vector<WorkerState>& Trainer::workers() const { return impl_->workers; }

const WorkerState& Trainer::worker(int stage, int replica) const {
  return impl_->workers[static_cast<std::size_t>(impl_->topo.worker_id(stage, replica))];
}

const std::vector<MetricsRecord>& Trainer::metrics() const { return impl_->records; }
const std::vector<double>& Trainer::last_losses() const { return impl_->last_losses; }
double Trainer::validation_loss() const { return impl_->validation_loss(); }
double Trainer::replica_std_combined() const { return impl_->replica_std_combined(); }

double Trainer::sim_time() const {
  return *std::max_element(impl_->clocks.begin(), impl_->clocks.end());
}

std::vector<int> Trainer::group_of(int worker_id, long outer_index) const {
  const int stage = impl_->topo.stage_of(worker_id);
  const GroupAssignment assignment =
      sample_groups(impl_->topo.stage_workers(stage), impl_->cfg.outer.group_size, outer_index,
                    impl_->groups_stream.derive(static_cast<std::uint64_t>(stage)));
  for (const std::vector<int>& group : assignment.groups)
    for (int id : group)
      if (id == worker_id) return group;
  throw state_error("group_of: worker not present in its stage assignment");
}

std::string run_experiment(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw config_error("config: out: an output path is required");
  Trainer trainer(cfg);
  trainer.run();
  write_file_atomic(cfg.out, metrics_to_jsonl(trainer.metrics()));
  write_file_atomic(cfg.out + ".csv", metrics_to_csv(trainer.metrics()));
  return cfg.out;
}

}  // namespace noloco
