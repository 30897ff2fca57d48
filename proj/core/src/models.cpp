#include "noloco/models.hpp"

#include <cmath>
#include <stdexcept>

#include "noloco/error.hpp"

namespace noloco {
namespace {

constexpr std::uint64_t kTagTeacher = 0x7e0c;
constexpr std::uint64_t kTagInputs = 0x1273;
constexpr std::uint64_t kTagNoise = 0x5a11;
constexpr std::uint64_t kTagEpoch = 0xe90c;
constexpr std::uint64_t kTagVal = 0xa71d;

Matrix apply_activation(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return pre.array().tanh().matrix();
    case Activation::kIdentity:
      return pre;
  }
  throw std::logic_error("unknown activation");
}

Matrix activation_derivative(const Matrix& post, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return (1.0 - post.array().square()).matrix();
    case Activation::kIdentity:
      return Matrix::Ones(post.rows(), post.cols());
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

QuadraticProblem make_quadratic_problem(Matrix a, Matrix sigma) {
  if (a.rows() != a.cols()) throw shape_error("quadratic problem: A must be square");
  if (sigma.rows() != a.rows() || sigma.cols() != a.cols())
    throw shape_error("quadratic problem: sigma must match A");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw shape_error("quadratic problem: A must be symmetric");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw numeric_error("quadratic problem: A must be positive definite");

  QuadraticProblem problem;
  problem.noise_factor = psd_factor(sigma);  // validates PSD
  problem.a = std::move(a);
  problem.sigma = std::move(sigma);
  return problem;
}

double quadratic_loss(const Vector& theta, const Vector& c, const QuadraticProblem& problem) {
  if (theta.size() != problem.dim() || c.size() != problem.dim())
    throw shape_error("quadratic_loss: dimension mismatch");
  const Vector diff = theta - c;
  return 0.5 * diff.dot(problem.a * diff);
}

Vector quadratic_grad(const Vector& theta, const Vector& c, const QuadraticProblem& problem) {
  if (theta.size() != problem.dim() || c.size() != problem.dim())
    throw shape_error("quadratic_grad: dimension mismatch");
  return problem.a * (theta - c);
}

Vector sample_quadratic_noise(const QuadraticProblem& problem, RngStream& rng) {
  return problem.noise_factor * standard_normal_vector(problem.dim(), rng);
}

// ---------------------------------------------------------------------------

int StagedMLP::layer_param_count(int layer) const {
  const LayerSpec& spec = layers.at(static_cast<std::size_t>(layer));
  return spec.in * spec.out + spec.out;
}

int StagedMLP::stage_param_count(int stage) const {
  int count = 0;
  for (int l = stage_begin.at(stage); l < stage_begin.at(stage + 1); ++l)
    count += layer_param_count(l);
  return count;
}

int StagedMLP::total_param_count() const {
  int count = 0;
  for (int l = 0; l < num_layers(); ++l) count += layer_param_count(l);
  return count;
}

int StagedMLP::stage_input_dim(int stage) const {
  return layers.at(stage_begin.at(stage)).in;
}

int StagedMLP::stage_output_dim(int stage) const {
  return layers.at(stage_begin.at(stage + 1) - 1).out;
}

StagedMLP make_staged_mlp(int in_dim, int hidden_width, int hidden_layers, int out_dim,
                          int num_stages) {
  if (in_dim < 1 || hidden_width < 1 || out_dim < 1)
    throw std::invalid_argument("make_staged_mlp: dimensions must be positive");
  if (hidden_layers < 1) throw std::invalid_argument("make_staged_mlp: need >= 1 hidden layer");
  const int total_layers = hidden_layers + 1;
  if (num_stages < 1 || num_stages > total_layers)
    throw std::invalid_argument("make_staged_mlp: stage count must be in [1, layers]");

  StagedMLP net;
  net.layers.push_back({in_dim, hidden_width, Activation::kTanh});
  for (int l = 1; l < hidden_layers; ++l)
    net.layers.push_back({hidden_width, hidden_width, Activation::kTanh});
  net.layers.push_back({hidden_width, out_dim, Activation::kIdentity});

  net.stage_begin.resize(static_cast<std::size_t>(num_stages) + 1);
  for (int s = 0; s <= num_stages; ++s)
    net.stage_begin[static_cast<std::size_t>(s)] = s * total_layers / num_stages;
  return net;
}

Vector init_mlp_params(const StagedMLP& net, RngStream& rng) {
  Vector params(net.total_param_count());
  int offset = 0;
  for (const LayerSpec& layer : net.layers) {
    const double std = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (int k = 0; k < layer.in * layer.out; ++k) params(offset + k) = std * rng.normal();
    offset += layer.in * layer.out;
    params.segment(offset, layer.out).setZero();
    offset += layer.out;
  }
  return params;
}

Vector slice_stage_params(const StagedMLP& net, int stage, const Vector& full_params) {
  if (full_params.size() != net.total_param_count())
    throw shape_error("slice_stage_params: wrong full parameter size");
  int offset = 0;
  for (int l = 0; l < net.stage_begin.at(stage); ++l) offset += net.layer_param_count(l);
  return full_params.segment(offset, net.stage_param_count(stage));
}

StageForward mlp_forward_stage(const StagedMLP& net, int stage, const Vector& params,
                               const Matrix& input) {
  if (stage < 0 || stage >= net.num_stages())
    throw std::invalid_argument("mlp_forward_stage: stage out of range");
  if (params.size() != net.stage_param_count(stage))
    throw shape_error("mlp_forward_stage: wrong parameter count for stage");
  if (input.cols() != net.stage_input_dim(stage))
    throw shape_error("mlp_forward_stage: input width does not match stage");

  StageForward result;
  result.cache.stage = stage;
  result.cache.input = input;

  Matrix x = input;
  int offset = 0;
  for (int l = net.stage_begin.at(stage); l < net.stage_begin.at(stage + 1); ++l) {
    const LayerSpec& layer = net.layers[static_cast<std::size_t>(l)];
    Eigen::Map<const Matrix> w(params.data() + offset, layer.out, layer.in);
    offset += layer.in * layer.out;
    Eigen::Map<const Vector> b(params.data() + offset, layer.out);
    offset += layer.out;

    Matrix pre = x * w.transpose();
    pre.rowwise() += b.transpose();
    Matrix post = apply_activation(pre, layer.act);
    result.cache.pre.push_back(std::move(pre));
    result.cache.post.push_back(post);
    x = std::move(post);
  }
  result.output = x;
  return result;
}

StageBackward mlp_backward_stage(const StagedMLP& net, int stage, const Vector& params,
                                 const StageActivations& cache, const Matrix& grad_out) {
  if (cache.stage != stage)
    throw state_error("mlp_backward_stage: cache does not belong to this stage");
  const int first = net.stage_begin.at(stage);
  const int last = net.stage_begin.at(stage + 1);
  if (static_cast<int>(cache.post.size()) != last - first ||
      static_cast<int>(cache.pre.size()) != last - first)
    throw state_error("mlp_backward_stage: cache is stale or incomplete");
  if (params.size() != net.stage_param_count(stage))
    throw shape_error("mlp_backward_stage: wrong parameter count for stage");
  if (grad_out.rows() != cache.input.rows() || grad_out.cols() != net.stage_output_dim(stage))
    throw shape_error("mlp_backward_stage: grad_out shape mismatch");

  // Parameter offsets per layer within the stage vector.
  std::vector<int> offsets(static_cast<std::size_t>(last - first));
  int offset = 0;
  for (int l = first; l < last; ++l) {
    offsets[static_cast<std::size_t>(l - first)] = offset;
    offset += net.layer_param_count(l);
  }

  StageBackward result;
  result.param_grads = Vector::Zero(params.size());

  Matrix upstream = grad_out;
  for (int l = last - 1; l >= first; --l) {
    const LayerSpec& layer = net.layers[static_cast<std::size_t>(l)];
    const int idx = l - first;
    const Matrix& post = cache.post[static_cast<std::size_t>(idx)];
    const Matrix& layer_in =
        idx == 0 ? cache.input : cache.post[static_cast<std::size_t>(idx - 1)];
    if (upstream.rows() != post.rows() || upstream.cols() != post.cols())
      throw shape_error("mlp_backward_stage: internal gradient shape mismatch");

    const Matrix d_pre = upstream.cwiseProduct(activation_derivative(post, layer.act));
    Eigen::Map<const Matrix> w(params.data() + offsets[static_cast<std::size_t>(idx)], layer.out,
                               layer.in);
    Eigen::Map<Matrix> gw(result.param_grads.data() + offsets[static_cast<std::size_t>(idx)],
                          layer.out, layer.in);
    gw = d_pre.transpose() * layer_in;
    Eigen::Map<Vector> gb(
        result.param_grads.data() + offsets[static_cast<std::size_t>(idx)] + layer.in * layer.out,
        layer.out);
    gb = d_pre.colwise().sum().transpose();
    upstream = d_pre * w;
  }
  result.input_grad = std::move(upstream);
  return result;
}

Matrix mlp_forward(const StagedMLP& net, const Vector& full_params, const Matrix& input) {
  Matrix x = input;
  int offset = 0;
  for (const LayerSpec& layer : net.layers) {
    Eigen::Map<const Matrix> w(full_params.data() + offset, layer.out, layer.in);
    offset += layer.in * layer.out;
    Eigen::Map<const Vector> b(full_params.data() + offset, layer.out);
    offset += layer.out;
    Matrix pre = x * w.transpose();
    pre.rowwise() += b.transpose();
    x = apply_activation(pre, layer.act);
  }
  return x;
}

double mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw shape_error("mse_loss: shape mismatch");
  return 0.5 * (pred - target).squaredNorm() / static_cast<double>(pred.rows());
}

Matrix mse_grad(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw shape_error("mse_grad: shape mismatch");
  return (pred - target) / static_cast<double>(pred.rows());
}

// ---------------------------------------------------------------------------

RegressionTask::RegressionTask(int n_samples, double noise_std, const StagedMLP& teacher_arch,
                               const RngStream& rng)
    : teacher_(teacher_arch), noise_std_(noise_std), base_(rng) {
  if (n_samples < 1) throw std::invalid_argument("RegressionTask: need >= 1 sample");
  if (noise_std < 0.0) throw std::invalid_argument("RegressionTask: noise_std must be >= 0");

  RngStream teacher_rng = base_.derive(kTagTeacher);
  teacher_params_ = init_mlp_params(teacher_, teacher_rng);

  const int in_dim = teacher_.stage_input_dim(0);
  const int out_dim = teacher_.stage_output_dim(teacher_.num_stages() - 1);
  RngStream input_rng = base_.derive(kTagInputs);
  inputs_.resize(n_samples, in_dim);
  for (int i = 0; i < n_samples; ++i)
    for (int j = 0; j < in_dim; ++j) inputs_(i, j) = input_rng.normal();

  targets_ = mlp_forward(teacher_, teacher_params_, inputs_);
  RngStream noise_rng = base_.derive(kTagNoise);
  for (int i = 0; i < n_samples; ++i)
    for (int j = 0; j < out_dim; ++j) targets_(i, j) += noise_std_ * noise_rng.normal();
}

std::vector<int> RegressionTask::shard_indices(int shard, int shard_count, long epoch) const {
  if (shard_count < 1 || shard < 0 || shard >= shard_count)
    throw std::invalid_argument("shard_indices: bad shard");
  const int shard_size = size() / shard_count;
  RngStream perm_rng = base_.derive(kTagEpoch).derive(static_cast<std::uint64_t>(epoch));
  const std::vector<int> perm = perm_rng.permutation(size());
  return std::vector<int>(perm.begin() + static_cast<std::ptrdiff_t>(shard) * shard_size,
                          perm.begin() + (static_cast<std::ptrdiff_t>(shard) + 1) * shard_size);
}

Batch RegressionTask::batch(int shard, int shard_count, long step, int batch_size) const {
  const int shard_size = size() / shard_count;
  if (batch_size < 1 || shard_size % batch_size != 0)
    throw config_error("RegressionTask: shard size must be a multiple of batch_size");
  const long batches_per_epoch = shard_size / batch_size;
  const long epoch = step / batches_per_epoch;
  const long within = (step % batches_per_epoch) * batch_size;

  const std::vector<int> indices = shard_indices(shard, shard_count, epoch);
  Batch out;
  out.inputs.resize(batch_size, inputs_.cols());
  out.targets.resize(batch_size, targets_.cols());
  for (int k = 0; k < batch_size; ++k) {
    const int row = indices[static_cast<std::size_t>(within + k)];
    out.inputs.row(k) = inputs_.row(row);
    out.targets.row(k) = targets_.row(row);
  }
  return out;
}

Batch RegressionTask::validation(int n_samples) const {
  if (n_samples < 1) throw std::invalid_argument("validation: need >= 1 sample");
  RngStream val_rng = base_.derive(kTagVal);
  Batch out;
  out.inputs.resize(n_samples, inputs_.cols());
  for (int i = 0; i < n_samples; ++i)
    for (int j = 0; j < inputs_.cols(); ++j) out.inputs(i, j) = val_rng.normal();
  out.targets = mlp_forward(teacher_, teacher_params_, out.inputs);
  for (int i = 0; i < n_samples; ++i)
    for (int j = 0; j < out.targets.cols(); ++j) out.targets(i, j) += noise_std_ * val_rng.normal();
  return out;
}

}  // namespace noloco
