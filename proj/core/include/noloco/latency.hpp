#pragma once

#include <cmath>
#include <vector>

#include "noloco/rng.hpp"

namespace noloco {

/// Log-normal message / compute latency: t = exp(g), g ~ N(mu, sigma2).
struct LatencyModel {
  double mu = 0.0;
  double sigma2 = 0.0;

  /// Expected single-message time t_c = exp(mu + sigma2 / 2).
  double mean_time() const { return std::exp(mu + sigma2 / 2.0); }
};

/// Deterministic tree all-reduce skeleton: 2 * t_c * log2(n)
/// (reduce to the root, then broadcast back down).
double tree_allreduce_time(int world, double t_c);

/// Closed-form expected maximum of two iid log-normal times:
///   (1 + erf(sigma / 2)) * exp(mu + sigma^2 / 2).
/// Twice this value is the mean duration of one pairwise averaging exchange.
double expected_pair_max(double mu, double sigma2);

struct ReduceRatioResult {
  double ratio = 0.0;      // mean tree all-reduce time / mean pairwise time
  double std_error = 0.0;  // delta-method standard error of the ratio
  double tree_mean = 0.0;
  double pair_mean = 0.0;
};

/// Monte-Carlo ratio of tree all-reduce completion time (each edge an iid
/// log-normal draw, parents wait for the slower child, reduce then broadcast)
/// to pairwise averaging time (2 * max of two draws). world must be a power
/// of two. With sigma2 = 0 both collapse and the ratio is exactly log2(world).
ReduceRatioResult mc_reduce_ratio(int world, const LatencyModel& model, int trials,
                                  const RngStream& rng);

/// A fleet of identical workers running outer rounds of inner compute phases.
struct FleetSpec {
  int world = 2;
  int inner_steps = 100;  // m inner steps per outer step
  int outer_steps = 500;  // T
  LatencyModel step_latency{1.0, 0.5};
  bool record_history = false;
};

enum class SyncMethod { kNoloco, kDiloco };

struct WallclockRun {
  double total = 0.0;                     // finish time of the last worker
  std::vector<double> worker_finish;      // per-worker final times
  std::vector<std::vector<double>> history;  // per outer step, when recording
};

/// Event simulation of T outer steps. Each worker's inner phase lasts the sum
/// of m iid log-normal step times. DiLoCo blocks on a global barrier per
/// outer step; NoLoCo blocks only on a fresh random partner per outer step,
/// with delays propagating through the changing pairings. Transfer time
/// itself is excluded; this isolates the blocking overhead. Identical stream
/// identities give identical phase durations for both methods, so NoLoCo's
/// total never exceeds DiLoCo's on a shared seed.
WallclockRun wallclock_sim(const FleetSpec& fleet, SyncMethod method, const RngStream& rng);

struct WallclockResult {
  double diloco_total = 0.0;
  double noloco_total = 0.0;
  double ratio = 0.0;  // DiLoCo / NoLoCo
  std::vector<double> diloco_finish;
  std::vector<double> noloco_finish;
};

/// Both methods on the same phase-duration draws.
WallclockResult wallclock_compare(const FleetSpec& fleet, const RngStream& rng);

}  // namespace noloco
