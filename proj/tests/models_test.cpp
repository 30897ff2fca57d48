#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "noloco/error.hpp"
#include "noloco/models.hpp"

using namespace noloco;

namespace {

QuadraticProblem small_problem(int dim, unsigned seed) {
  RngStream rng(seed);
  Matrix a = make_spd_matrix(dim, 0.5, 2.0, rng);
  Matrix sigma = 0.25 * Matrix::Identity(dim, dim);
  return make_quadratic_problem(std::move(a), std::move(sigma));
}

// Central finite differences of a scalar function of a parameter vector.
template <typename Fn>
Vector finite_diff(const Vector& params, Fn&& fn, double h) {
  Vector grad(params.size());
  Vector probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double saved = probe(i);
    probe(i) = saved + h;
    const double up = fn(probe);
    probe(i) = saved - h;
    const double down = fn(probe);
    probe(i) = saved;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("quadratic loss values") {
  QuadraticProblem p;
  p.a = Matrix::Identity(2, 2);
  p.sigma = Matrix::Zero(2, 2);
  p.noise_factor = Matrix::Zero(2, 2);

  Vector c(2);
  c << 1.0, -1.0;
  CHECK(quadratic_loss(c, c, p) == 0.0);

  Vector theta(2);
  theta << 4.0, 3.0;  // theta - c = (3, 4)
  CHECK(quadratic_loss(theta, c, p) == 12.5);

  Vector wrong(3);
  CHECK_THROWS_AS(quadratic_loss(wrong, c, p), shape_error);
}

TEST_CASE("quadratic gradient") {
  QuadraticProblem p;
  p.a = 2.0 * Matrix::Identity(2, 2);
  Vector c = Vector::Zero(2);
  Vector theta(2);
  theta << 1.0, 0.0;
  const Vector g = quadratic_grad(theta, c, p);
  CHECK(g(0) == 2.0);
  CHECK(g(1) == 0.0);
  CHECK(quadratic_grad(c, c, p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadratic gradient matches finite differences") {
  const QuadraticProblem p = small_problem(5, 101);
  RngStream rng(102);
  for (int probe = 0; probe < 100; ++probe) {
    const Vector theta = standard_normal_vector(5, rng);
    const Vector c = standard_normal_vector(5, rng);
    const Vector analytic = quadratic_grad(theta, c, p);
    const Vector fd = finite_diff(
        theta, [&](const Vector& t) { return quadratic_loss(t, c, p); }, 1e-6);
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double rel = std::abs(fd(i) - analytic(i)) / (std::abs(analytic(i)) + 1e-12);
      CHECK(rel <= 1e-6);
    }
  }
}

TEST_CASE("quadratic loss is non-negative") {
  const QuadraticProblem p = small_problem(4, 103);
  RngStream rng(104);
  for (int probe = 0; probe < 200; ++probe) {
    const Vector theta = 3.0 * standard_normal_vector(4, rng);
    const Vector c = 3.0 * standard_normal_vector(4, rng);
    CHECK(quadratic_loss(theta, c, p) >= 0.0);
  }
}

TEST_CASE("mlp stage forward trivial cases") {
  StagedMLP net = make_staged_mlp(3, 4, 2, 2, 1);
  const Vector zeros = Vector::Zero(net.total_param_count());
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const StageForward fwd = mlp_forward_stage(net, 0, zeros, x);
  CHECK(fwd.output.cwiseAbs().maxCoeff() == 0.0);
  for (const Matrix& pre : fwd.cache.pre) CHECK(pre.cwiseAbs().maxCoeff() == 0.0);

  // Single identity block with W = I reproduces its input.
  StagedMLP passthrough;
  passthrough.layers = {{3, 3, Activation::kIdentity}};
  passthrough.stage_begin = {0, 1};
  Vector params = Vector::Zero(12);
  Eigen::Map<Matrix>(params.data(), 3, 3) = Matrix::Identity(3, 3);
  const StageForward id = mlp_forward_stage(passthrough, 0, params, x);
  CHECK((id.output - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stage partition composes to the monolithic network") {
  RngStream rng(201);
  Matrix x(5, 6);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = rng.normal();

  for (int stages : {1, 2, 4}) {
    StagedMLP net = make_staged_mlp(6, 8, 3, 2, stages);
    RngStream init_rng(202);
    const Vector full = init_mlp_params(net, init_rng);
    const Matrix mono = mlp_forward(net, full, x);

    Matrix composed = x;
    for (int s = 0; s < stages; ++s)
      composed = mlp_forward_stage(net, s, slice_stage_params(net, s, full), composed).output;
    CHECK((composed - mono).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("staged backward equals the monolithic gradient for any partition") {
  RngStream rng(205);
  Matrix x(6, 5), y(6, 2);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < 2; ++j) y(i, j) = rng.normal();
  }

  const auto chain_gradient = [&](int stages) {
    StagedMLP net = make_staged_mlp(5, 8, 3, 2, stages);
    RngStream init_rng(206);
    const Vector full = init_mlp_params(net, init_rng);
    std::vector<Vector> params;
    std::vector<StageActivations> caches;
    Matrix activ = x;
    for (int s = 0; s < stages; ++s) {
      params.push_back(slice_stage_params(net, s, full));
      StageForward fwd = mlp_forward_stage(net, s, params.back(), activ);
      caches.push_back(std::move(fwd.cache));
      activ = std::move(fwd.output);
    }
    Matrix upstream = mse_grad(activ, y);
    Vector grad(net.total_param_count());
    int offset = net.total_param_count();
    for (int s = stages - 1; s >= 0; --s) {
      StageBackward bwd = mlp_backward_stage(net, s, params[static_cast<std::size_t>(s)],
                                             caches[static_cast<std::size_t>(s)], upstream);
      offset -= static_cast<int>(bwd.param_grads.size());
      grad.segment(offset, bwd.param_grads.size()) = bwd.param_grads;
      upstream = std::move(bwd.input_grad);
    }
    return grad;
  };

  const Vector mono = chain_gradient(1);
  for (int stages : {2, 4})
    CHECK((chain_gradient(stages) - mono).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mlp backward matches finite differences on every parameter") {
  StagedMLP net = make_staged_mlp(4, 6, 3, 2, 2);
  RngStream rng(301);
  const Vector full = init_mlp_params(net, rng);
  Matrix x(8, 4), y(8, 2);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < 2; ++j) y(i, j) = rng.normal();
  }

  // Analytic gradients via the staged backward pass.
  std::vector<Vector> stage_params;
  std::vector<StageActivations> caches;
  Matrix activ = x;
  for (int s = 0; s < net.num_stages(); ++s) {
    stage_params.push_back(slice_stage_params(net, s, full));
    StageForward fwd = mlp_forward_stage(net, s, stage_params.back(), activ);
    caches.push_back(std::move(fwd.cache));
    activ = std::move(fwd.output);
  }
  Matrix upstream = mse_grad(activ, y);
  std::vector<Vector> analytic(static_cast<std::size_t>(net.num_stages()));
  for (int s = net.num_stages() - 1; s >= 0; --s) {
    StageBackward bwd = mlp_backward_stage(net, s, stage_params[static_cast<std::size_t>(s)],
                                           caches[static_cast<std::size_t>(s)], upstream);
    analytic[static_cast<std::size_t>(s)] = std::move(bwd.param_grads);
    upstream = std::move(bwd.input_grad);
  }
  Vector analytic_full(net.total_param_count());
  int offset = 0;
  for (const Vector& g : analytic) {
    analytic_full.segment(offset, g.size()) = g;
    offset += static_cast<int>(g.size());
  }

  const Vector fd = finite_diff(
      full, [&](const Vector& params) { return mse_loss(mlp_forward(net, params, x), y); }, 1e-5);
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    const double rel = std::abs(fd(i) - analytic_full(i)) /
                       (std::max(std::abs(fd(i)), std::abs(analytic_full(i))) + 1e-8);
    CHECK(rel <= 1e-6);
  }
}

TEST_CASE("backward edge cases") {
  StagedMLP net = make_staged_mlp(3, 4, 2, 2, 1);
  RngStream rng(401);
  const Vector params = init_mlp_params(net, rng);
  Matrix x(2, 3);
  x << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  StageForward fwd = mlp_forward_stage(net, 0, params, x);

  const Matrix zero_grad = Matrix::Zero(2, 2);
  const StageBackward bwd = mlp_backward_stage(net, 0, params, fwd.cache, zero_grad);
  CHECK(bwd.param_grads.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bwd.input_grad.cwiseAbs().maxCoeff() == 0.0);

  StageActivations stale;
  stale.stage = 0;
  CHECK_THROWS_AS(mlp_backward_stage(net, 0, params, stale, zero_grad), state_error);
}

TEST_CASE("single linear block reproduces the least-squares gradient") {
  StagedMLP net;
  net.layers = {{3, 2, Activation::kIdentity}};
  net.stage_begin = {0, 1};
  RngStream rng(402);
  const Vector params = init_mlp_params(net, rng);
  Matrix x(6, 3), y(6, 2);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < 2; ++j) y(i, j) = rng.normal();
  }

  StageForward fwd = mlp_forward_stage(net, 0, params, x);
  const Matrix residual = (fwd.output - y) / 6.0;
  StageBackward bwd = mlp_backward_stage(net, 0, params, fwd.cache, residual);

  // d/dW of 0.5/N ||XW^T + b - Y||^2 is R^T X with R the scaled residual.
  const Matrix expected_w = residual.transpose() * x;
  Eigen::Map<const Matrix> gw(bwd.param_grads.data(), 2, 3);
  CHECK((gw - expected_w).cwiseAbs().maxCoeff() <= 1e-14);
  const Vector expected_b = residual.colwise().sum().transpose();
  CHECK((bwd.param_grads.tail(2) - expected_b).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("regression task is deterministic and shards are disjoint") {
  StagedMLP arch = make_staged_mlp(4, 6, 2, 2, 1);
  RngStream base(7, 77);
  RegressionTask task(64, 0.1, arch, base);

  const Batch b1 = task.batch(1, 4, 3, 8);
  const Batch b2 = task.batch(1, 4, 3, 8);
  CHECK((b1.inputs - b2.inputs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((b1.targets - b2.targets).cwiseAbs().maxCoeff() == 0.0);

  for (long epoch : {0L, 1L, 5L}) {
    std::set<int> seen;
    for (int shard = 0; shard < 4; ++shard) {
      for (int idx : task.shard_indices(shard, 4, epoch)) {
        CHECK(seen.insert(idx).second);  // no index appears in two shards
      }
    }
    CHECK(seen.size() == 64);
  }
}

TEST_CASE("noise-free task has a zero-loss teacher") {
  StagedMLP arch = make_staged_mlp(4, 6, 2, 2, 1);
  RngStream base(8, 88);
  RegressionTask task(32, 0.0, arch, base);
  const Matrix pred = mlp_forward(arch, task.teacher_params(), task.inputs());
  CHECK(mse_loss(pred, task.targets()) <= 1e-24);
}
