#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "noloco/numerics.hpp"
#include "noloco/rng.hpp"

namespace noloco {

enum class InnerMethod { kSgd, kAdam };
enum class ScheduleKind { kConstant, kWarmupCosine };

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  long warmup_steps = 0;
  double floor_fraction = 1.0;  // final lr as a fraction of the base lr
  long total_steps = 0;
};

/// Learning rate at a 0-based global step: linear warmup to the base rate,
/// then cosine decay to floor_fraction * base at total_steps.
double scheduled_lr(const LrSchedule& schedule, double base_lr, long step);

struct InnerOptConfig {
  InnerMethod method = InnerMethod::kSgd;
  double lr = 0.05;                  // omega
  long steps_per_outer = 50;         // m
  std::optional<double> clip_norm;   // L2 clip, disabled when unset
  LrSchedule schedule;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

enum class OuterMethod { kNoloco, kDiloco, kSyncDp, kNone };

struct OuterOptConfig {
  OuterMethod method = OuterMethod::kNoloco;
  double alpha = 0.5;              // momentum
  double beta = 0.7;               // outer learning rate
  std::optional<double> gamma;     // averaging pull; defaults to the stability midpoint
  int group_size = 2;              // n
  long interval = 50;              // inner steps per outer step
  bool allow_unstable_gamma = false;
  bool reset_inner_state = false;  // drop Adam moments at outer steps

  double resolved_gamma() const;
};

/// One data-parallel replica: slow weights phi, fast weights theta, outer
/// momentum delta, inner-optimizer state, and a private random stream.
struct WorkerState {
  int worker_id = 0;
  Vector phi;
  Vector theta;
  Vector delta;
  Vector adam_m;
  Vector adam_v;
  long adam_steps = 0;
  RngStream rng;
};

WorkerState make_worker_state(int worker_id, const Vector& init, const RngStream& rng);

/// Advance theta by one clipped SGD/Adam step on `grad` at the scheduled
/// learning rate. Throws numeric_error on non-finite gradients.
void inner_step(WorkerState& state, const Vector& grad, const InnerOptConfig& cfg,
                long global_step);

/// Outer gradient after an inner phase: theta - phi.
Vector outer_gradient(const WorkerState& state);

/// Partition of one stage's workers into gossip groups for an outer step.
struct GroupAssignment {
  long outer_step = 0;
  std::vector<std::vector<int>> groups;
};

/// Uniformly random partition into groups of `group_size` (a random
/// permutation chunked into blocks), deterministic given the stream identity
/// and the outer step index. group_size must divide the worker count.
GroupAssignment sample_groups(const std::vector<int>& workers, int group_size, long outer_step,
                              const RngStream& stream);

/// Modified Nesterov gossip step over one group:
///   delta_i <- alpha*delta_i + (beta/n)*sum_j Delta_j
///              - (gamma/n)*sum_j (phi_i - phi_j)
///   phi_i   <- phi_i + delta_i,   theta_i <- phi_i.
/// Delta = theta - phi points downhill, so the beta term descends
/// (equivalently, -beta times the phi - theta pseudo-gradient). Reductions
/// run in ascending worker-id order so results do not depend on group
/// ordering. With the whole stage as one group the gamma term vanishes
/// identically and the update reduces to diloco_outer_step bit for bit.
void noloco_outer_step(std::vector<WorkerState*> group, const OuterOptConfig& cfg);

/// All-reduce Nesterov outer step: one shared momentum and slow-weight vector,
///   delta <- alpha*delta + beta*mean(Delta_j),  phi <- phi + delta,
/// mirrored to every replica.
void diloco_outer_step(std::vector<WorkerState*> stage_workers, const OuterOptConfig& cfg);

/// Fully synchronous data parallelism: the mean gradient applied through
/// inner_step to one shared parameter vector, mirrored to all replicas.
void sync_dp_step(std::vector<WorkerState*> stage_workers, const std::vector<Vector>& grads,
                  const InnerOptConfig& cfg, long global_step);

/// Open stability interval for gamma:
///   sqrt(n/(2(n-1))) * alpha < gamma < sqrt(n/(2(n-1)) * (2 + alpha^2)).
std::pair<double, double> gamma_bounds(double alpha, int group_size);

}  // namespace noloco
