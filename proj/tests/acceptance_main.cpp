// Acceptance suite: one line per criterion, nonzero exit on any failure.
//
// Heavier Monte-Carlo checks live here rather than in the unit tests; each
// criterion prints its measured quantities so a failure is diagnosable from
// the log alone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "noloco/analytic.hpp"
#include "noloco/harness.hpp"
#include "noloco/latency.hpp"

using namespace noloco;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Runner {
 public:
  void run(int index, const std::string& title, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = body();
    } catch (const std::exception& err) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + err.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << index << " — " << title
         << " (" << outcome.detail << "; " << std::fixed << seconds << "s)";
    std::cout << line.str() << std::endl;
    if (!outcome.pass) ++failures_;
  }

  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string fmt(double value, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << value;
  return out.str();
}

ExperimentConfig quadratic_base(double lr, long interval, int replicas) {
  ExperimentConfig cfg;
  cfg.workload.kind = WorkloadKind::kQuadratic;
  cfg.replicas = replicas;
  cfg.inner.method = InnerMethod::kSgd;
  cfg.inner.lr = lr;
  cfg.inner.clip_norm.reset();
  cfg.inner.schedule = {ScheduleKind::kConstant, 0, 1.0, 0};
  cfg.outer.method = OuterMethod::kNoloco;
  cfg.outer.alpha = 0.5;
  cfg.outer.beta = 0.7;
  cfg.outer.group_size = 2;
  cfg.outer.interval = interval;
  cfg.inner.steps_per_outer = interval;
  cfg.steps = 1000000;  // driven manually
  cfg.metrics_every = 1000000;
  return cfg;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome criterion1_expectation() {
  RngStream problem_rng(271);
  QuadraticProblem problem = make_quadratic_problem(
      make_spd_matrix(8, 0.25, 2.0, problem_rng), 0.01 * Matrix::Identity(8, 8));

  const double lr = 0.45;  // lr * lambda in [0.11, 0.9]
  const long m = 25;
  const int runs = 512;
  const std::vector<long> checkpoints{10, 50, 200};
  const Vector phi0 = 2.0 * Vector::Ones(8);

  ExperimentConfig cfg = quadratic_base(lr, m, 8);

  std::vector<Matrix> samples;  // one (runs x 8) matrix per checkpoint
  for (std::size_t c = 0; c < checkpoints.size(); ++c) samples.emplace_back(runs, 8);

  for (int k = 0; k < runs; ++k) {
    cfg.seed = 10000 + static_cast<std::uint64_t>(k);
    Trainer trainer(cfg, problem, phi0);
    long reached = 0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      trainer.run_steps((checkpoints[c] - reached) * m);
      reached = checkpoints[c];
      samples[c].row(k) = trainer.worker(0, 0).phi.transpose();
    }
  }

  AnalyticConfig analytic;
  analytic.problem = problem;
  analytic.lr = lr;
  analytic.inner_steps = m;
  analytic.alpha = 0.5;
  analytic.beta = 0.7;
  analytic.gamma = cfg.outer.resolved_gamma();
  analytic.group_size = 2;
  analytic.horizon = checkpoints.back();
  const auto expected = expected_phi_sequence(analytic, phi0);

  bool pass = true;
  double worst_z = 0.0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const Vector& target = expected[static_cast<std::size_t>(checkpoints[c])];
    for (int j = 0; j < 8; ++j) {
      const double mean = samples[c].col(j).mean();
      const double var =
          (samples[c].col(j).array() - mean).square().sum() / static_cast<double>(runs - 1);
      const double se = std::sqrt(var / runs);
      const double z = std::abs(mean - target(j)) / (se + 1e-15);
      worst_z = std::max(worst_z, z);
      if (z > 3.0) pass = false;
    }
  }

  Vector final_mean(8);
  for (int j = 0; j < 8; ++j) final_mean(j) = samples.back().col(j).mean();
  const double residual = final_mean.norm() / phi0.norm();
  if (residual > 0.05) pass = false;

  return {pass, "512 runs, max |z| = " + fmt(worst_z) +
                    " (<=3), |mean phi_200| / |phi_0| = " + fmt(residual) + " (<=0.05)"};
}

Outcome criterion2_variance() {
  // Cross-replica dispersion (population variance across replicas, traced
  // over coordinates) at steady state, against the vectorized-covariance
  // fixed point. R = 16 keeps member coupling weak; lr * m is small so the
  // covariance terms the recursion neglects stay inside the tolerance.
  QuadraticProblem problem =
      make_quadratic_problem(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const long m = 10;
  const int runs = 512;
  const long settle = 400;
  const int windows = 11;

  const auto mc_trace = [&](double lr) {
    ExperimentConfig cfg = quadratic_base(lr, m, 16);
    double dispersion = 0.0;
    for (int k = 0; k < runs; ++k) {
      cfg.seed = 30000 + static_cast<std::uint64_t>(k);
      Trainer trainer(cfg, problem, Vector::Zero(2));
      trainer.run_steps(settle * m);
      for (int w = 0; w < windows; ++w) {
        if (w > 0) trainer.run_steps(10 * m);
        const double std = trainer.replica_std_combined();
        dispersion += std * std;
      }
    }
    return dispersion / (static_cast<double>(runs) * windows);
  };

  const auto analytic_trace = [&](double lr) {
    AnalyticConfig analytic;
    analytic.problem = problem;
    analytic.lr = lr;
    analytic.inner_steps = m;
    analytic.alpha = 0.5;
    analytic.beta = 0.7;
    analytic.gamma = 1.0;
    analytic.group_size = 2;
    analytic.horizon = 10;
    return variance_sequence(analytic).asymptote;
  };

  const double mc_fast = mc_trace(0.008);
  const double mc_slow = mc_trace(0.004);
  const double an_fast = analytic_trace(0.008);
  const double an_slow = analytic_trace(0.004);

  const double ratio = mc_fast / mc_slow;
  const double rel_fast = mc_fast / an_fast - 1.0;
  const double rel_slow = mc_slow / an_slow - 1.0;

  const bool pass = std::abs(ratio - 4.0) <= 1.0 && std::abs(rel_fast) <= 0.25 &&
                    std::abs(rel_slow) <= 0.25;
  return {pass, "variance ratio (lr vs lr/2) = " + fmt(ratio) +
                    " (4 +- 1), MC/analytic - 1 = " + fmt(rel_fast) + " and " + fmt(rel_slow) +
                    " (|.| <= 0.25)"};
}

Outcome criterion3_gamma_stability() {
  const auto [lo, hi] = gamma_bounds(0.5, 2);
  if (lo != 0.5 || hi != 1.5) return {false, "gamma_bounds(0.5, 2) != (0.5, 1.5) exactly"};

  QuadraticProblem problem =
      make_quadratic_problem(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const long m = 10;
  const long horizon = 500;
  const int runs = 128;

  // Geometric mean of the cross-replica variance across seeded runs; an
  // exponentially diverging quantity needs a log-scale central tendency for
  // a stable per-step trace.
  const auto variance_trace = [&](double gamma) {
    std::vector<double> log_sum(static_cast<std::size_t>(horizon), 0.0);
    for (int k = 0; k < runs; ++k) {
      ExperimentConfig cfg = quadratic_base(0.05, m, 8);
      cfg.outer.gamma = gamma;
      cfg.outer.allow_unstable_gamma = true;
      cfg.seed = 40000 + static_cast<std::uint64_t>(k);
      Trainer trainer(cfg, problem, Vector::Zero(2));
      for (long t = 0; t < horizon; ++t) {
        trainer.run_steps(m);
        const double std = trainer.replica_std_combined();
        log_sum[static_cast<std::size_t>(t)] += std::log(std * std);
      }
    }
    std::vector<double> trace(log_sum.size());
    for (std::size_t t = 0; t < log_sum.size(); ++t) trace[t] = std::exp(log_sum[t] / runs);
    return trace;
  };

  const std::vector<double> stable = variance_trace(0.5 * (lo + hi));
  std::vector<double> early(stable.begin() + 100, stable.begin() + 200);
  std::vector<double> late(stable.begin() + 400, stable.end());
  const double early_med = median(early);
  const double late_med = median(late);
  bool pass = true;
  std::string detail;
  if (!(late_med <= 5.0 * early_med) || !std::isfinite(late_med)) {
    pass = false;
    detail = "midpoint gamma variance drifted: ";
  }

  const std::vector<double> unstable = variance_trace(1.5 * hi);
  bool monotone = true;
  for (std::size_t t = unstable.size() - 100; t < unstable.size(); ++t)
    if (!(unstable[t] > unstable[t - 1])) monotone = false;
  if (!monotone) {
    pass = false;
    detail += "divergent gamma trace not monotone over final 100 steps; ";
  }

  return {pass, detail + "stable late/early variance = " + fmt(late_med / early_med) +
                    " (<=5), divergent growth over last 100 steps = " +
                    fmt(unstable.back() / unstable[unstable.size() - 100], 3) +
                    "x (128-seed geometric mean), bounds exact"};
}

Outcome criterion4_diloco_reduction() {
  RngStream problem_rng(281);
  QuadraticProblem problem = make_quadratic_problem(
      make_spd_matrix(4, 0.25, 2.0, problem_rng), 0.04 * Matrix::Identity(4, 4));
  const Vector phi0 = Vector::Ones(4);
  const long m = 10;

  ExperimentConfig gossip_cfg = quadratic_base(0.3, m, 4);
  gossip_cfg.outer.group_size = 4;  // n = R: one group covers the stage
  gossip_cfg.seed = 7;

  ExperimentConfig allreduce_cfg = gossip_cfg;
  allreduce_cfg.outer.method = OuterMethod::kDiloco;

  Trainer gossip(gossip_cfg, problem, phi0);
  Trainer allreduce(allreduce_cfg, problem, phi0);

  for (long outer = 1; outer <= 50; ++outer) {
    gossip.run_steps(m);
    allreduce.run_steps(m);
    for (int r = 0; r < 4; ++r) {
      const Vector& a = gossip.worker(0, r).phi;
      const Vector& b = allreduce.worker(0, r).phi;
      if (std::memcmp(a.data(), b.data(), sizeof(double) * 4) != 0)
        return {false, "trajectories diverged at outer step " + std::to_string(outer) +
                           ", replica " + std::to_string(r)};
    }
  }
  return {true, "phi bit-identical across 50 outer steps, 4 replicas, n = R"};
}

Outcome criterion5_identical_expected_values() {
  RngStream problem_rng(291);
  QuadraticProblem problem = make_quadratic_problem(
      make_spd_matrix(4, 0.25, 2.0, problem_rng), 0.04 * Matrix::Identity(4, 4));
  const Vector phi0 = Vector::Ones(4);
  const long m = 10;
  const int runs = 1000;
  const std::vector<long> checkpoints{5, 10, 20, 30};

  ExperimentConfig cfg = quadratic_base(0.3, m, 4);

  std::vector<Matrix> deviations(checkpoints.size(), Matrix(runs, 4));
  for (int k = 0; k < runs; ++k) {
    cfg.seed = 20000 + static_cast<std::uint64_t>(k);
    Trainer trainer(cfg, problem, phi0);
    long reached = 0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      trainer.run_steps((checkpoints[c] - reached) * m);
      reached = checkpoints[c];
      const std::vector<int> group = trainer.group_of(0, checkpoints[c]);
      Vector mean = Vector::Zero(4);
      for (int id : group) mean += trainer.workers()[static_cast<std::size_t>(id)].phi;
      mean /= static_cast<double>(group.size());
      deviations[c].row(k) = (trainer.worker(0, 0).phi - mean).transpose();
    }
  }

  bool pass = true;
  double worst_z = 0.0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (int j = 0; j < 4; ++j) {
      const double mean = deviations[c].col(j).mean();
      const double var =
          (deviations[c].col(j).array() - mean).square().sum() / static_cast<double>(runs - 1);
      const double se = std::sqrt(var / runs);
      const double z = std::abs(mean) / (se + 1e-15);
      worst_z = std::max(worst_z, z);
      if (z > 3.0) pass = false;
    }
  }
  return {pass, "1000 runs, cross-run mean deviation from the group mean: max |z| = " +
                    fmt(worst_z) + " (<=3) at t in {5,10,20,30}"};
}

Outcome criterion6_reduce_ratio() {
  // Zero variance: the simulation collapses to the closed form exactly
  // (mu = 0 keeps every edge time at exactly 1).
  for (int n = 2; n <= 1024; n *= 2) {
    const ReduceRatioResult r = mc_reduce_ratio(n, LatencyModel{0.0, 0.0}, 4, RngStream(1));
    if (r.ratio != std::log2(static_cast<double>(n)))
      return {false, "sigma2=0 ratio at n=" + std::to_string(n) + " is " + fmt(r.ratio, 17)};
  }

  // Closed-form pair max against Monte-Carlo at 1e6 samples.
  for (const auto& [mu, sigma2] : {std::pair{0.0, 1.0}, {1.0, 0.5}}) {
    RngStream rng(61, static_cast<std::uint64_t>(100 * sigma2));
    const int draws = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double v = std::max(rng.lognormal(mu, sigma2), rng.lognormal(mu, sigma2));
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq - draws * mean * mean) / (draws - 1.0) / draws);
    const double z = std::abs(mean - expected_pair_max(mu, sigma2)) / se;
    if (z > 3.0)
      return {false, "pair max MC z = " + fmt(z) + " at mu=" + fmt(mu) + " sigma2=" + fmt(sigma2)};
  }

  // Strictly increasing in sigma2 at n = 1024.
  std::vector<double> ratios;
  for (double sigma2 : {0.0, 0.25, 0.5, 1.0})
    ratios.push_back(mc_reduce_ratio(1024, LatencyModel{1.0, sigma2}, 2000, RngStream(62)).ratio);
  for (std::size_t i = 1; i < ratios.size(); ++i)
    if (!(ratios[i] > ratios[i - 1]))
      return {false, "ratio not increasing in sigma2: " + fmt(ratios[i - 1]) + " -> " +
                         fmt(ratios[i])};

  return {true, "sigma2=0 exact for n in {2..1024}; pair max within 3 SE; n=1024 ratios " +
                    fmt(ratios[0]) + " < " + fmt(ratios[1]) + " < " + fmt(ratios[2]) + " < " +
                    fmt(ratios[3])};
}

Outcome criterion7_wallclock() {
  std::vector<double> ratios;
  for (int world : {8, 64, 256, 1024}) {
    FleetSpec fleet;
    fleet.world = world;
    fleet.inner_steps = 100;
    fleet.outer_steps = 500;
    fleet.step_latency = {1.0, 0.5};
    ratios.push_back(wallclock_compare(fleet, RngStream(4242)).ratio);
  }
  const double headline = ratios.back();
  bool pass = headline >= 1.10 && headline <= 1.30;
  for (std::size_t i = 1; i < ratios.size(); ++i)
    if (!(ratios[i] >= ratios[i - 1])) pass = false;
  return {pass, "DiLoCo/NoLoCo ratio at N=1024, m=100: " + fmt(headline) +
                    " (in [1.10, 1.30]); N in {8,64,256,1024}: " + fmt(ratios[0]) + ", " +
                    fmt(ratios[1]) + ", " + fmt(ratios[2]) + ", " + fmt(ratios[3]) +
                    " non-decreasing"};
}

Outcome criterion8_gradient_integrity() {
  StagedMLP net = make_staged_mlp(8, 32, 3, 4, 2);  // 4 layers in 2 stages
  RngStream rng(301);
  const Vector params = init_mlp_params(net, rng);
  Matrix x(16, 8), y(16, 4);
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 8; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < 4; ++j) y(i, j) = rng.normal();
  }

  // Staged analytic gradient.
  std::vector<Vector> stage_params;
  std::vector<StageActivations> caches;
  Matrix activ = x;
  for (int s = 0; s < 2; ++s) {
    stage_params.push_back(slice_stage_params(net, s, params));
    StageForward fwd = mlp_forward_stage(net, s, stage_params.back(), activ);
    caches.push_back(std::move(fwd.cache));
    activ = std::move(fwd.output);
  }
  const Matrix mono_forward = mlp_forward(net, params, x);
  const double forward_gap = (activ - mono_forward).cwiseAbs().maxCoeff();
  if (forward_gap > 1e-10)
    return {false, "staged forward differs from monolithic by " + fmt(forward_gap, 3)};

  Matrix upstream = mse_grad(activ, y);
  Vector staged_grad(net.total_param_count());
  int offset = net.total_param_count();
  for (int s = 1; s >= 0; --s) {
    StageBackward bwd = mlp_backward_stage(net, s, stage_params[static_cast<std::size_t>(s)],
                                           caches[static_cast<std::size_t>(s)], upstream);
    offset -= static_cast<int>(bwd.param_grads.size());
    staged_grad.segment(offset, bwd.param_grads.size()) = bwd.param_grads;
    upstream = std::move(bwd.input_grad);
  }

  // Monolithic (single-stage) backward for the partition comparison.
  StagedMLP whole = make_staged_mlp(8, 32, 3, 4, 1);
  StageForward whole_fwd = mlp_forward_stage(whole, 0, params, x);
  const Vector whole_grad =
      mlp_backward_stage(whole, 0, params, whole_fwd.cache, mse_grad(whole_fwd.output, y))
          .param_grads;
  const double backward_gap = (whole_grad - staged_grad).cwiseAbs().maxCoeff();
  if (backward_gap > 1e-10)
    return {false, "staged backward differs from monolithic by " + fmt(backward_gap, 3)};

  // Richardson-extrapolated central differences on every parameter; the
  // plain two-point stencil bottoms out near 1e-6 relative error on the
  // smallest gradients, this reaches ~1e-7.
  const double h = 4e-4;
  Vector probe = params;
  const auto loss_at = [&](Eigen::Index i, double value) {
    const double saved = probe(i);
    probe(i) = value;
    const double loss = mse_loss(mlp_forward(net, probe, x), y);
    probe(i) = saved;
    return loss;
  };
  double worst_rel = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double p = params(i);
    const double coarse = (loss_at(i, p + h) - loss_at(i, p - h)) / (2.0 * h);
    const double fine = (loss_at(i, p + h / 2) - loss_at(i, p - h / 2)) / h;
    const double fd = (4.0 * fine - coarse) / 3.0;
    const double rel = std::abs(fd - staged_grad(i)) /
                       (std::max(std::abs(fd), std::abs(staged_grad(i))) + 1e-8);
    worst_rel = std::max(worst_rel, rel);
  }
  const bool pass = worst_rel <= 1e-6;
  return {pass, std::to_string(params.size()) + " parameters, worst finite-difference rel err = " +
                    fmt(worst_rel, 3) + " (<=1e-6), forward gap " + fmt(forward_gap, 3) +
                    ", backward gap " + fmt(backward_gap, 3)};
}

Outcome criterion9_routing_ablation() {
  const auto final_std = [](RoutingMode mode, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.workload.kind = WorkloadKind::kMlp;
    cfg.workload.in_dim = 8;
    cfg.workload.out_dim = 4;
    cfg.workload.hidden_width = 32;
    cfg.workload.hidden_layers = 3;
    cfg.workload.n_samples = 512;  // small shards so shard bias dominates
    cfg.workload.batch_size = 16;
    cfg.workload.val_samples = 64;
    cfg.workload.noise_std = 0.05;
    cfg.stages = 2;
    cfg.replicas = 4;
    cfg.inner.method = InnerMethod::kSgd;
    cfg.inner.lr = 0.1;
    cfg.inner.clip_norm.reset();
    cfg.inner.schedule = {ScheduleKind::kConstant, 0, 1.0, 0};
    cfg.outer.method = OuterMethod::kNone;
    cfg.routing.mode = mode;
    cfg.steps = 1200;
    cfg.metrics_every = 1200;
    cfg.seed = seed;
    Trainer trainer(cfg);
    trainer.run();
    return trainer.metrics().back().replica_std;
  };

  std::vector<double> random_stds, fixed_stds;
  for (std::uint64_t seed = 5000; seed < 5010; ++seed) {
    random_stds.push_back(final_std(RoutingMode::kRandom, seed));
    fixed_stds.push_back(final_std(RoutingMode::kFixed, seed));
  }
  const double random_med = median(random_stds);
  const double fixed_med = median(fixed_stds);
  const bool pass = random_med < fixed_med;
  return {pass, "10 seeds, median final replica std: random = " + fmt(random_med) +
                    " < fixed = " + fmt(fixed_med) +
                    " (ratio " + fmt(random_med / fixed_med, 3) + ")"};
}

Outcome criterion10_correlation_report() {
  RngStream problem_rng(311);
  QuadraticProblem problem = make_quadratic_problem(
      make_spd_matrix(4, 0.25, 2.0, problem_rng), 0.04 * Matrix::Identity(4, 4));

  ExperimentConfig cfg = quadratic_base(0.3, 25, 8);
  cfg.inner.schedule = {ScheduleKind::kWarmupCosine, 200, 0.1, 5000};
  cfg.steps = 5000;
  cfg.metrics_every = 25;
  cfg.seed = 17;

  Trainer trainer(cfg, problem, Vector::Ones(4));
  trainer.run();

  std::vector<double> stds, lrs;
  for (const MetricsRecord& r : trainer.metrics()) {
    if (r.step <= 200) continue;  // skip warmup
    stds.push_back(r.replica_std);
    lrs.push_back(r.lr);
  }
  const double r = pearson(stds, lrs);
  // Report-only: the reference band is 0.91-0.97; r > 0.8 expected.
  std::string note = r > 0.8 ? "within expectation" : "below 0.8 (informational)";
  return {true, "Pearson(replica std, inner lr) = " + fmt(r) +
                    ", reference band [0.91, 0.97], " + note};
}

Outcome criterion11_determinism() {
  ExperimentConfig cfg;
  cfg.workload.kind = WorkloadKind::kQuadratic;
  cfg.workload.dim = 4;
  cfg.replicas = 2;
  cfg.inner.method = InnerMethod::kSgd;
  cfg.inner.lr = 0.1;
  cfg.inner.clip_norm.reset();
  cfg.inner.schedule = {ScheduleKind::kConstant, 0, 1.0, 0};
  cfg.outer.method = OuterMethod::kNoloco;
  cfg.outer.interval = 10;
  cfg.inner.steps_per_outer = 10;
  cfg.steps = 100;
  cfg.metrics_every = 10;
  cfg.seed = 123;

  const auto read = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };

  const auto dir = std::filesystem::temp_directory_path();
  cfg.out = (dir / "noloco_accept_a.jsonl").string();
  run_experiment(cfg);
  const std::string first = read(cfg.out);
  const std::string first_csv = read(cfg.out + ".csv");
  cfg.out = (dir / "noloco_accept_b.jsonl").string();
  run_experiment(cfg);
  const bool pass = !first.empty() && first == read(cfg.out) &&
                    first_csv == read(cfg.out + ".csv");
  return {pass, "repeated run produced " + std::to_string(first.size()) +
                    " identical metric bytes (and identical CSV sidecar)"};
}

}  // namespace

int main() {
  Runner runner;
  runner.run(1, "expected slow weights follow the two-term recursion", criterion1_expectation);
  runner.run(2, "steady-state variance scales as omega^2 and matches the fixed point",
             criterion2_variance);
  runner.run(3, "gamma stability boundary", criterion3_gamma_stability);
  runner.run(4, "whole-group gossip reduces to the all-reduce method bit for bit",
             criterion4_diloco_reduction);
  runner.run(5, "replicas share expected values (group-mean deviation centered at zero)",
             criterion5_identical_expected_values);
  runner.run(6, "tree-reduce vs pairwise averaging latency ratio", criterion6_reduce_ratio);
  runner.run(7, "blocking-overhead simulation at scale", criterion7_wallclock);
  runner.run(8, "gradient integrity of the staged MLP", criterion8_gradient_integrity);
  runner.run(9, "random routing lowers replica dispersion without outer sync",
             criterion9_routing_ablation);
  runner.run(10, "replica dispersion tracks the inner learning rate (report-only)",
             criterion10_correlation_report);
  runner.run(11, "byte-identical metrics under identical config and seed", criterion11_determinism);

  if (runner.failures() == 0) {
    std::cout << "all 11 acceptance criteria passed" << std::endl;
    return 0;
  }
  std::cout << runner.failures() << " acceptance criteria FAILED" << std::endl;
  return 1;
}
