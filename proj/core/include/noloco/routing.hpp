#pragma once

#include <vector>

#include "noloco/rng.hpp"

namespace noloco {

/// S pipeline stages, each replicated R times. Worker ids are stage-major:
/// worker(s, r) = s * R + r.
struct PipelineTopology {
  int num_stages = 1;
  int replicas = 1;

  int world() const { return num_stages * replicas; }
  int worker_id(int stage, int replica) const { return stage * replicas + replica; }
  int stage_of(int worker) const { return worker / replicas; }
  int replica_of(int worker) const { return worker % replicas; }
  std::vector<int> stage_workers(int stage) const;
};

/// One permutation per stage boundary: a microbatch leaving stage b at
/// replica r continues at replica boundary[b][r] of stage b+1. Bijections, so
/// every replica receives exactly one microbatch per step.
struct RoutePlan {
  long step = 0;
  std::vector<std::vector<int>> boundary;  // [num_stages-1][replicas]
};

/// Independent uniform permutation per boundary, deterministic given the
/// routing stream identity and the step index.
RoutePlan sample_route_plan(const PipelineTopology& topology, long step,
                            const RngStream& routing_stream);

/// Identity permutations at every boundary (classic fixed pipelines).
RoutePlan fixed_route_plan(const PipelineTopology& topology, long step);

/// Destination replica at stage+1. Throws for the last stage.
int route_forward(const RoutePlan& plan, int stage, int replica);

/// Replicas visited by one microbatch during the forward pass, stage by stage.
struct PathRecord {
  int microbatch = 0;
  std::vector<int> replicas;
};

/// Replica visited at stage-1, i.e. where the gradient must be sent.
/// Throws for stage 0.
int route_backward(const PathRecord& record, int stage);

}  // namespace noloco
