#include <benchmark/benchmark.h>

#include "noloco/analytic.hpp"
#include "noloco/harness.hpp"
#include "noloco/latency.hpp"

using namespace noloco;

namespace {

QuadraticProblem bench_problem(int dim) {
  RngStream rng(1);
  return make_quadratic_problem(make_spd_matrix(dim, 0.25, 2.0, rng),
                                0.01 * Matrix::Identity(dim, dim));
}

void BM_QuadraticInnerStep(benchmark::State& state) {
  const QuadraticProblem problem = bench_problem(static_cast<int>(state.range(0)));
  InnerOptConfig cfg;
  cfg.method = InnerMethod::kSgd;
  cfg.lr = 0.1;
  cfg.clip_norm.reset();
  WorkerState w = make_worker_state(0, Vector::Ones(problem.dim()), RngStream(2));
  long step = 0;
  for (auto _ : state) {
    const Vector c = problem.noise_factor * standard_normal_vector(problem.dim(), w.rng);
    inner_step(w, problem.a * (w.theta - c), cfg, step++);
    benchmark::DoNotOptimize(w.theta.data());
  }
}
BENCHMARK(BM_QuadraticInnerStep)->Arg(8)->Arg(16);

void BM_MlpStageForwardBackward(benchmark::State& state) {
  StagedMLP net = make_staged_mlp(8, static_cast<int>(state.range(0)), 3, 4, 2);
  RngStream rng(3);
  const Vector params = slice_stage_params(net, 0, init_mlp_params(net, rng));
  Matrix x(16, 8);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 8; ++j) x(i, j) = rng.normal();

  for (auto _ : state) {
    StageForward fwd = mlp_forward_stage(net, 0, params, x);
    const Matrix grad_out = Matrix::Ones(16, net.stage_output_dim(0));
    StageBackward bwd = mlp_backward_stage(net, 0, params, fwd.cache, grad_out);
    benchmark::DoNotOptimize(bwd.param_grads.data());
  }
}
BENCHMARK(BM_MlpStageForwardBackward)->Arg(32)->Arg(64);

void BM_GossipOuterStep(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  OuterOptConfig cfg;
  cfg.alpha = 0.5;
  cfg.beta = 0.7;
  cfg.group_size = 2;
  RngStream rng(4);
  WorkerState a = make_worker_state(0, standard_normal_vector(dim, rng), RngStream(5));
  WorkerState b = make_worker_state(1, standard_normal_vector(dim, rng), RngStream(6));
  for (auto _ : state) {
    a.theta = a.phi + Vector::Constant(dim, 0.01);
    b.theta = b.phi + Vector::Constant(dim, 0.02);
    noloco_outer_step({&a, &b}, cfg);
    benchmark::DoNotOptimize(a.phi.data());
  }
}
BENCHMARK(BM_GossipOuterStep)->Arg(1024)->Arg(65536);

void BM_AnalyticPredict(benchmark::State& state) {
  AnalyticConfig cfg;
  cfg.problem = bench_problem(static_cast<int>(state.range(0)));
  cfg.lr = 0.1;
  cfg.inner_steps = 25;
  cfg.alpha = 0.5;
  cfg.beta = 0.7;
  cfg.gamma = 1.0;
  cfg.group_size = 2;
  cfg.horizon = 200;
  const Vector phi0 = Vector::Ones(cfg.problem.dim());
  for (auto _ : state) {
    const AnalyticPrediction pred = predict(cfg, phi0);
    benchmark::DoNotOptimize(pred.variance_asymptote);
  }
}
BENCHMARK(BM_AnalyticPredict)->Arg(8)->Arg(16);

void BM_WallclockSim(benchmark::State& state) {
  FleetSpec fleet;
  fleet.world = static_cast<int>(state.range(0));
  fleet.inner_steps = 10;
  fleet.outer_steps = 50;
  fleet.step_latency = {1.0, 0.5};
  for (auto _ : state) {
    const WallclockRun run = wallclock_sim(fleet, SyncMethod::kNoloco, RngStream(7));
    benchmark::DoNotOptimize(run.total);
  }
}
BENCHMARK(BM_WallclockSim)->Arg(64)->Arg(256);

void BM_TreeReduceTrial(benchmark::State& state) {
  const LatencyModel model{1.0, 0.5};
  const int world = static_cast<int>(state.range(0));
  int trial = 0;
  for (auto _ : state) {
    const ReduceRatioResult r = mc_reduce_ratio(world, model, 1, RngStream(8, ++trial));
    benchmark::DoNotOptimize(r.ratio);
  }
}
BENCHMARK(BM_TreeReduceTrial)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
