#include "noloco/routing.hpp"

#include <numeric>
#include <stdexcept>

#include "noloco/error.hpp"

namespace noloco {

std::vector<int> PipelineTopology::stage_workers(int stage) const {
  if (stage < 0 || stage >= num_stages)
    throw std::invalid_argument("stage_workers: stage out of range");
  std::vector<int> ids(static_cast<std::size_t>(replicas));
  std::iota(ids.begin(), ids.end(), worker_id(stage, 0));
  return ids;
}

RoutePlan sample_route_plan(const PipelineTopology& topology, long step,
                            const RngStream& routing_stream) {
  if (topology.replicas < 1) throw std::invalid_argument("sample_route_plan: replicas must be >= 1");
  RoutePlan plan;
  plan.step = step;
  plan.boundary.reserve(static_cast<std::size_t>(topology.num_stages - 1));
  RngStream step_stream = routing_stream.derive(static_cast<std::uint64_t>(step));
  for (int b = 0; b + 1 < topology.num_stages; ++b) {
    RngStream boundary_stream = step_stream.derive(static_cast<std::uint64_t>(b));
    plan.boundary.push_back(boundary_stream.permutation(topology.replicas));
  }
  return plan;
}

RoutePlan fixed_route_plan(const PipelineTopology& topology, long step) {
  RoutePlan plan;
  plan.step = step;
  std::vector<int> identity(static_cast<std::size_t>(topology.replicas));
  std::iota(identity.begin(), identity.end(), 0);
  plan.boundary.assign(static_cast<std::size_t>(topology.num_stages - 1), identity);
  return plan;
}

int route_forward(const RoutePlan& plan, int stage, int replica) {
  if (stage < 0 || stage >= static_cast<int>(plan.boundary.size()))
    throw state_error("route_forward: no next stage");
  const std::vector<int>& perm = plan.boundary[static_cast<std::size_t>(stage)];
  if (replica < 0 || replica >= static_cast<int>(perm.size()))
    throw std::invalid_argument("route_forward: replica out of range");
  return perm[static_cast<std::size_t>(replica)];
}

int route_backward(const PathRecord& record, int stage) {
  if (stage <= 0) throw state_error("route_backward: no upstream stage");
  if (stage >= static_cast<int>(record.replicas.size()))
    throw std::invalid_argument("route_backward: stage beyond recorded path");
  return record.replicas[static_cast<std::size_t>(stage) - 1];
}

}  // namespace noloco
