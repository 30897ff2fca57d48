#include "noloco/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "noloco/error.hpp"

namespace noloco {
namespace {

void sort_by_id(std::vector<WorkerState*>& workers) {
  std::sort(workers.begin(), workers.end(),
            [](const WorkerState* a, const WorkerState* b) { return a->worker_id < b->worker_id; });
}

void check_same_dim(const std::vector<WorkerState*>& workers) {
  for (const WorkerState* w : workers) {
    if (w->phi.size() != workers.front()->phi.size() ||
        w->theta.size() != w->phi.size() || w->delta.size() != w->phi.size())
      throw shape_error("outer step: parameter dimensions differ across group members");
  }
}

Vector mean_outer_gradient(const std::vector<WorkerState*>& sorted) {
  Vector sum = Vector::Zero(sorted.front()->phi.size());
  for (const WorkerState* w : sorted) sum += w->theta - w->phi;
  return sum / static_cast<double>(sorted.size());
}

// Shared by the gossip and all-reduce variants so that a whole-stage gossip
// group reproduces the all-reduce trajectory bit for bit. The outer gradient
// Delta = theta - phi already points downhill, so the momentum accumulates
// +beta * mean(Delta); equivalently, -beta times the (phi - theta)
// pseudo-gradient.
Vector momentum_update(double alpha, const Vector& delta, double beta, const Vector& mean_delta) {
  return alpha * delta + beta * mean_delta;
}

void reset_adam(WorkerState& state) {
  state.adam_m.resize(0);
  state.adam_v.resize(0);
  state.adam_steps = 0;
}

}  // namespace

double scheduled_lr(const LrSchedule& schedule, double base_lr, long step) {
  if (schedule.kind == ScheduleKind::kConstant) return base_lr;
  if (schedule.warmup_steps > 0 && step < schedule.warmup_steps)
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(schedule.warmup_steps);
  const double floor = schedule.floor_fraction * base_lr;
  const long span = schedule.total_steps - schedule.warmup_steps;
  if (span <= 0 || step >= schedule.total_steps) return floor;
  const double progress =
      static_cast<double>(step - schedule.warmup_steps) / static_cast<double>(span);
  return floor + (base_lr - floor) * 0.5 * (1.0 + std::cos(M_PI * progress));
}

double OuterOptConfig::resolved_gamma() const {
  if (gamma) return *gamma;
  const auto [lo, hi] = gamma_bounds(alpha, group_size);
  return 0.5 * (lo + hi);
}

WorkerState make_worker_state(int worker_id, const Vector& init, const RngStream& rng) {
  WorkerState state;
  state.worker_id = worker_id;
  state.phi = init;
  state.theta = init;
  state.delta = Vector::Zero(init.size());
  state.rng = rng;
  return state;
}

void inner_step(WorkerState& state, const Vector& grad, const InnerOptConfig& cfg,
                long global_step) {
  if (grad.size() != state.theta.size()) throw shape_error("inner_step: gradient size mismatch");
  if (!grad.allFinite())
    throw numeric_error("inner_step: non-finite gradient at worker " +
                        std::to_string(state.worker_id));

  Vector g = grad;
  if (cfg.clip_norm) {
    const double norm = g.norm();
    if (norm > *cfg.clip_norm) g *= *cfg.clip_norm / norm;
  }
  const double lr = scheduled_lr(cfg.schedule, cfg.lr, global_step);

  switch (cfg.method) {
    case InnerMethod::kSgd:
      state.theta -= lr * g;
      return;
    case InnerMethod::kAdam: {
      if (state.adam_m.size() != g.size()) {
        state.adam_m = Vector::Zero(g.size());
        state.adam_v = Vector::Zero(g.size());
        state.adam_steps = 0;
      }
      ++state.adam_steps;
      state.adam_m = cfg.adam_beta1 * state.adam_m + (1.0 - cfg.adam_beta1) * g;
      state.adam_v =
          cfg.adam_beta2 * state.adam_v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
      const double bias1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.adam_steps));
      const double bias2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.adam_steps));
      const Vector m_hat = state.adam_m / bias1;
      const Vector v_hat = state.adam_v / bias2;
      state.theta -= lr * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + cfg.adam_eps).matrix());
      return;
    }
  }
  throw std::logic_error("inner_step: unknown method");
}

Vector outer_gradient(const WorkerState& state) { return state.theta - state.phi; }

GroupAssignment sample_groups(const std::vector<int>& workers, int group_size, long outer_step,
                              const RngStream& stream) {
  if (group_size < 1) throw config_error("sample_groups: group size must be >= 1");
  const int count = static_cast<int>(workers.size());
  if (count == 0 || count % group_size != 0)
    throw config_error("sample_groups: group size must divide the worker count");

  std::vector<int> sorted = workers;
  std::sort(sorted.begin(), sorted.end());

  RngStream step_stream = stream.derive(static_cast<std::uint64_t>(outer_step));
  const std::vector<int> perm = step_stream.permutation(count);

  GroupAssignment assignment;
  assignment.outer_step = outer_step;
  for (int g = 0; g < count / group_size; ++g) {
    std::vector<int> group(static_cast<std::size_t>(group_size));
    for (int k = 0; k < group_size; ++k)
      group[static_cast<std::size_t>(k)] =
          sorted[static_cast<std::size_t>(perm[static_cast<std::size_t>(g * group_size + k)])];
    assignment.groups.push_back(std::move(group));
  }
  return assignment;
}

void noloco_outer_step(std::vector<WorkerState*> group, const OuterOptConfig& cfg) {
  if (group.empty()) throw std::invalid_argument("noloco_outer_step: empty group");
  sort_by_id(group);
  check_same_dim(group);

  const double n = static_cast<double>(group.size());
  const double gamma = cfg.resolved_gamma();
  const Vector mean_delta = mean_outer_gradient(group);

  // Deviation sums before any mutation; (phi_i - phi_j) summed directly so the
  // pull term is exactly zero whenever the group members agree bitwise.
  std::vector<Vector> pull(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    Vector sum = Vector::Zero(group[i]->phi.size());
    for (const WorkerState* other : group) sum += group[i]->phi - other->phi;
    pull[i] = sum / n;
  }

  for (std::size_t i = 0; i < group.size(); ++i) {
    WorkerState& w = *group[i];
    w.delta = momentum_update(cfg.alpha, w.delta, cfg.beta, mean_delta);
    w.delta -= gamma * pull[i];
    w.phi += w.delta;
    w.theta = w.phi;
    if (cfg.reset_inner_state) reset_adam(w);
  }
}

void diloco_outer_step(std::vector<WorkerState*> stage_workers, const OuterOptConfig& cfg) {
  if (stage_workers.empty()) throw std::invalid_argument("diloco_outer_step: empty worker list");
  sort_by_id(stage_workers);
  check_same_dim(stage_workers);

  const Vector mean_delta = mean_outer_gradient(stage_workers);
  const Vector delta =
      momentum_update(cfg.alpha, stage_workers.front()->delta, cfg.beta, mean_delta);
  const Vector phi = stage_workers.front()->phi + delta;

  for (WorkerState* w : stage_workers) {
    w->delta = delta;
    w->phi = phi;
    w->theta = phi;
    if (cfg.reset_inner_state) reset_adam(*w);
  }
}

void sync_dp_step(std::vector<WorkerState*> stage_workers, const std::vector<Vector>& grads,
                  const InnerOptConfig& cfg, long global_step) {
  if (stage_workers.empty()) throw std::invalid_argument("sync_dp_step: empty worker list");
  if (grads.size() != stage_workers.size())
    throw shape_error("sync_dp_step: one gradient per replica required");

  std::vector<std::size_t> order(stage_workers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stage_workers[a]->worker_id < stage_workers[b]->worker_id;
  });

  Vector mean_grad = Vector::Zero(stage_workers.front()->theta.size());
  for (std::size_t i : order) {
    if (grads[i].size() != mean_grad.size()) throw shape_error("sync_dp_step: gradient size mismatch");
    mean_grad += grads[i];
  }
  mean_grad /= static_cast<double>(stage_workers.size());

  WorkerState& leader = *stage_workers[order.front()];
  inner_step(leader, mean_grad, cfg, global_step);
  leader.phi = leader.theta;
  for (std::size_t i : order) {
    WorkerState& w = *stage_workers[i];
    if (&w == &leader) continue;
    w.theta = leader.theta;
    w.phi = leader.phi;
    w.adam_m = leader.adam_m;
    w.adam_v = leader.adam_v;
    w.adam_steps = leader.adam_steps;
  }
}

std::pair<double, double> gamma_bounds(double alpha, int group_size) {
  if (group_size < 2) throw std::invalid_argument("gamma_bounds: group size must be >= 2");
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("gamma_bounds: alpha must be in [0, 1)");
  const double ratio = static_cast<double>(group_size) / (2.0 * (group_size - 1));
  return {std::sqrt(ratio) * alpha, std::sqrt(ratio * (2.0 + alpha * alpha))};
}

}  // namespace noloco
