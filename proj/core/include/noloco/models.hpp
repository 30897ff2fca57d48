#pragma once

#include <utility>
#include <vector>

#include "noloco/numerics.hpp"
#include "noloco/rng.hpp"

namespace noloco {

/// Stochastic quadratic loss L(theta) = 0.5 (theta - c)^T A (theta - c) with
/// c ~ N(0, sigma). A symmetric positive definite, sigma positive
/// semi-definite, both d x d.
struct QuadraticProblem {
  Matrix a;
  Matrix sigma;
  Matrix noise_factor;  // L with L L^T = sigma, cached for sampling

  int dim() const { return static_cast<int>(a.rows()); }
};

QuadraticProblem make_quadratic_problem(Matrix a, Matrix sigma);

double quadratic_loss(const Vector& theta, const Vector& c, const QuadraticProblem& problem);
Vector quadratic_grad(const Vector& theta, const Vector& c, const QuadraticProblem& problem);
Vector sample_quadratic_noise(const QuadraticProblem& problem, RngStream& rng);

// ---------------------------------------------------------------------------
// Stage-partitioned multi-layer perceptron
// ---------------------------------------------------------------------------

enum class Activation { kTanh, kIdentity };

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::kTanh;
};

/// Dense MLP partitioned into consecutive pipeline stages. Parameters are
/// flat vectors, one per stage: per layer the weight matrix (out x in,
/// column-major) followed by the bias.
struct StagedMLP {
  std::vector<LayerSpec> layers;
  std::vector<int> stage_begin;  // size num_stages()+1; stage s owns [begin[s], begin[s+1])

  int num_stages() const { return static_cast<int>(stage_begin.size()) - 1; }
  int num_layers() const { return static_cast<int>(layers.size()); }
  int layer_param_count(int layer) const;
  int stage_param_count(int stage) const;
  int total_param_count() const;
  int stage_input_dim(int stage) const;
  int stage_output_dim(int stage) const;
};

/// hidden_layers tanh layers of hidden_width plus an identity output layer,
/// split into num_stages consecutive stages of near-equal layer counts.
StagedMLP make_staged_mlp(int in_dim, int hidden_width, int hidden_layers, int out_dim,
                          int num_stages);

/// Full-network initial parameters: W ~ N(0, 1/fan_in), b = 0.
Vector init_mlp_params(const StagedMLP& net, RngStream& rng);

Vector slice_stage_params(const StagedMLP& net, int stage, const Vector& full_params);

struct Batch {
  Matrix inputs;   // samples x features
  Matrix targets;  // samples x outputs
};

/// Cached per-layer pre-activations and outputs of one stage, enough for an
/// exact backward pass along the same path.
struct StageActivations {
  int stage = -1;
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

struct StageForward {
  Matrix output;
  StageActivations cache;
};

StageForward mlp_forward_stage(const StagedMLP& net, int stage, const Vector& params,
                               const Matrix& input);

struct StageBackward {
  Vector param_grads;
  Matrix input_grad;
};

StageBackward mlp_backward_stage(const StagedMLP& net, int stage, const Vector& params,
                                 const StageActivations& cache, const Matrix& grad_out);

/// Monolithic forward through every layer.
Matrix mlp_forward(const StagedMLP& net, const Vector& full_params, const Matrix& input);

double mse_loss(const Matrix& pred, const Matrix& target);
Matrix mse_grad(const Matrix& pred, const Matrix& target);

// ---------------------------------------------------------------------------
// Synthetic regression data
// ---------------------------------------------------------------------------

/// Teacher-network regression task: a fixed random MLP generates targets with
/// additive Gaussian noise. Deterministic given the stream identity; epochs
/// are random permutations partitioned disjointly across shards.
class RegressionTask {
 public:
  RegressionTask(int n_samples, double noise_std, const StagedMLP& teacher_arch,
                 const RngStream& rng);

  /// Minibatch `step` of `shard` out of `shard_count` disjoint shards.
  /// Requires shard sizes divisible by batch_size.
  Batch batch(int shard, int shard_count, long step, int batch_size) const;

  /// Sample indices owned by a shard in a given epoch (for audits).
  std::vector<int> shard_indices(int shard, int shard_count, long epoch) const;

  /// Held-out batch drawn separately from every training shard.
  Batch validation(int n_samples) const;

  int size() const { return static_cast<int>(inputs_.rows()); }
  const Matrix& inputs() const { return inputs_; }
  const Matrix& targets() const { return targets_; }
  const StagedMLP& teacher() const { return teacher_; }
  const Vector& teacher_params() const { return teacher_params_; }

 private:
  StagedMLP teacher_;
  Vector teacher_params_;
  Matrix inputs_;
  Matrix targets_;
  double noise_std_ = 0.0;
  RngStream base_;
};

}  // namespace noloco
