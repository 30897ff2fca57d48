#include "noloco/latency.hpp"

#include <algorithm>
#include <stdexcept>

#include "noloco/error.hpp"
#include "noloco/numerics.hpp"

namespace noloco {
namespace {

constexpr std::uint64_t kTagTreeTrial = 0x7233;
constexpr std::uint64_t kTagPairTrial = 0x9a12;
constexpr std::uint64_t kTagPhases = 0xf0a5;
constexpr std::uint64_t kTagPairing = 0x3b61;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double tree_roundtrip(int world, const LatencyModel& model, RngStream& rng) {
  // Reduce: leaves to root, a parent fires after its slower child arrives.
  std::vector<double> level(static_cast<std::size_t>(world), 0.0);
  while (level.size() > 1) {
    std::vector<double> parents(level.size() / 2);
    for (std::size_t p = 0; p < parents.size(); ++p) {
      const double left = level[2 * p] + rng.lognormal(model.mu, model.sigma2);
      const double right = level[2 * p + 1] + rng.lognormal(model.mu, model.sigma2);
      parents[p] = std::max(left, right);
    }
    level = std::move(parents);
  }
  const double up = level[0];

  // Broadcast: root back to the leaves; completion is the slowest leaf.
  level.assign(1, 0.0);
  while (static_cast<int>(level.size()) < world) {
    std::vector<double> children(level.size() * 2);
    for (std::size_t p = 0; p < level.size(); ++p) {
      children[2 * p] = level[p] + rng.lognormal(model.mu, model.sigma2);
      children[2 * p + 1] = level[p] + rng.lognormal(model.mu, model.sigma2);
    }
    level = std::move(children);
  }
  const double down = *std::max_element(level.begin(), level.end());
  return up + down;
}

}  // namespace

double tree_allreduce_time(int world, double t_c) {
  if (world < 2) throw std::invalid_argument("tree_allreduce_time: world must be >= 2");
  return 2.0 * t_c * std::log2(static_cast<double>(world));
}

double expected_pair_max(double mu, double sigma2) {
  if (sigma2 < 0.0) throw std::invalid_argument("expected_pair_max: sigma2 must be >= 0");
  const double sigma = std::sqrt(sigma2);
  return (1.0 + erf(sigma / 2.0)) * std::exp(mu + sigma2 / 2.0);
}

ReduceRatioResult mc_reduce_ratio(int world, const LatencyModel& model, int trials,
                                  const RngStream& rng) {
  if (!is_power_of_two(world) || world < 2)
    throw std::invalid_argument("mc_reduce_ratio: world must be a power of two >= 2");
  if (trials < 1) throw std::invalid_argument("mc_reduce_ratio: trials must be >= 1");
  if (model.sigma2 < 0.0) throw std::invalid_argument("mc_reduce_ratio: sigma2 must be >= 0");

  double tree_sum = 0.0, tree_sq = 0.0;
  double pair_sum = 0.0, pair_sq = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    RngStream tree_rng = rng.derive(kTagTreeTrial).derive(static_cast<std::uint64_t>(trial));
    const double tree = tree_roundtrip(world, model, tree_rng);
    tree_sum += tree;
    tree_sq += tree * tree;

    RngStream pair_rng = rng.derive(kTagPairTrial).derive(static_cast<std::uint64_t>(trial));
    const double t1 = pair_rng.lognormal(model.mu, model.sigma2);
    const double t2 = pair_rng.lognormal(model.mu, model.sigma2);
    const double pair = 2.0 * std::max(t1, t2);
    pair_sum += pair;
    pair_sq += pair * pair;
  }

  ReduceRatioResult result;
  const double n = static_cast<double>(trials);
  result.tree_mean = tree_sum / n;
  result.pair_mean = pair_sum / n;
  result.ratio = result.tree_mean / result.pair_mean;
  if (trials > 1) {
    const double tree_var = std::max(0.0, (tree_sq - n * result.tree_mean * result.tree_mean) / (n - 1.0));
    const double pair_var = std::max(0.0, (pair_sq - n * result.pair_mean * result.pair_mean) / (n - 1.0));
    result.std_error =
        result.ratio * std::sqrt(tree_var / (n * result.tree_mean * result.tree_mean) +
                                 pair_var / (n * result.pair_mean * result.pair_mean));
  }
  return result;
}

WallclockRun wallclock_sim(const FleetSpec& fleet, SyncMethod method, const RngStream& rng) {
  if (fleet.world < 2) throw std::invalid_argument("wallclock_sim: world must be >= 2");
  if (method == SyncMethod::kNoloco && fleet.world % 2 != 0)
    throw std::invalid_argument("wallclock_sim: pairwise method needs an even world size");
  if (fleet.inner_steps < 1 || fleet.outer_steps < 1)
    throw std::invalid_argument("wallclock_sim: step counts must be >= 1");
  if (fleet.step_latency.sigma2 < 0.0)
    throw std::invalid_argument("wallclock_sim: sigma2 must be >= 0");

  const int world = fleet.world;
  std::vector<RngStream> phase_rngs;
  phase_rngs.reserve(static_cast<std::size_t>(world));
  for (int w = 0; w < world; ++w)
    phase_rngs.push_back(rng.derive(kTagPhases).derive(static_cast<std::uint64_t>(w)));

  WallclockRun run;
  std::vector<double> finish(static_cast<std::size_t>(world), 0.0);
  std::vector<double> arrival(static_cast<std::size_t>(world), 0.0);

  for (int t = 0; t < fleet.outer_steps; ++t) {
    for (int w = 0; w < world; ++w) {
      double phase = 0.0;
      for (int k = 0; k < fleet.inner_steps; ++k)
        phase += phase_rngs[static_cast<std::size_t>(w)].lognormal(fleet.step_latency.mu,
                                                                   fleet.step_latency.sigma2);
      arrival[static_cast<std::size_t>(w)] = finish[static_cast<std::size_t>(w)] + phase;
    }

    if (method == SyncMethod::kDiloco) {
      const double barrier = *std::max_element(arrival.begin(), arrival.end());
      std::fill(finish.begin(), finish.end(), barrier);
    } else {
      RngStream pairing = rng.derive(kTagPairing).derive(static_cast<std::uint64_t>(t));
      const std::vector<int> perm = pairing.permutation(world);
      for (std::size_t p = 0; p < perm.size(); p += 2) {
        const auto a = static_cast<std::size_t>(perm[p]);
        const auto b = static_cast<std::size_t>(perm[p + 1]);
        const double sync = std::max(arrival[a], arrival[b]);
        finish[a] = sync;
        finish[b] = sync;
      }
    }
    if (fleet.record_history) run.history.push_back(finish);
  }

  run.worker_finish = std::move(finish);
  run.total = *std::max_element(run.worker_finish.begin(), run.worker_finish.end());
  return run;
}

WallclockResult wallclock_compare(const FleetSpec& fleet, const RngStream& rng) {
  WallclockRun diloco = wallclock_sim(fleet, SyncMethod::kDiloco, rng);
  WallclockRun noloco = wallclock_sim(fleet, SyncMethod::kNoloco, rng);
  WallclockResult result;
  result.diloco_total = diloco.total;
  result.noloco_total = noloco.total;
  result.ratio = diloco.total / noloco.total;
  result.diloco_finish = std::move(diloco.worker_finish);
  result.noloco_finish = std::move(noloco.worker_finish);
  return result;
}

}  // namespace noloco
