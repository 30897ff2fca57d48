#include "noloco/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "noloco/error.hpp"
#include "noloco/optimizers.hpp"

namespace noloco {
namespace {

void validate(const AnalyticConfig& cfg) {
  if (cfg.problem.dim() < 1) throw std::invalid_argument("analytic: empty problem");
  if (cfg.problem.dim() > 16)
    throw std::invalid_argument("analytic: dimension capped at 16 (d^4 operator cost)");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("analytic: lr must be > 0");
  if (cfg.inner_steps < 1) throw std::invalid_argument("analytic: inner_steps must be >= 1");
  if (cfg.alpha < 0.0 || cfg.alpha >= 1.0)
    throw std::invalid_argument("analytic: alpha must be in [0, 1)");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("analytic: beta must be > 0");
  if (cfg.group_size < 2) throw std::invalid_argument("analytic: group_size must be >= 2");
  if (cfg.horizon < 0) throw std::invalid_argument("analytic: horizon must be >= 0");
}

Matrix matrix_power(const Matrix& base, long exponent) {
  Matrix result = Matrix::Identity(base.rows(), base.cols());
  Matrix acc = base;
  long e = exponent;
  while (e > 0) {
    if (e & 1) result = result * acc;
    acc = acc * acc;
    e >>= 1;
  }
  return result;
}

double trace_of_vectorized(const Vector& u, int dim) {
  double trace = 0.0;
  for (int i = 0; i < dim; ++i) trace += u(i * dim + i);
  return trace;
}

}  // namespace

Matrix matrix_B(const QuadraticProblem& problem, double lr) {
  const int d = problem.dim();
  return Matrix::Identity(d, d) - lr * problem.a;
}

std::vector<Vector> expected_phi_sequence(const AnalyticConfig& cfg, const Vector& phi0) {
  validate(cfg);
  if (phi0.size() != cfg.problem.dim())
    throw shape_error("expected_phi_sequence: phi0 dimension mismatch");

  const int d = cfg.problem.dim();
  const Matrix bm = matrix_power(matrix_B(cfg.problem, cfg.lr), cfg.inner_steps);
  const Matrix contraction = Matrix::Identity(d, d) + cfg.beta * (bm - Matrix::Identity(d, d));
  const Matrix recursion = contraction + cfg.alpha * Matrix::Identity(d, d);

  std::vector<Vector> seq;
  seq.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  seq.push_back(phi0);
  if (cfg.horizon >= 1) seq.push_back(contraction * phi0);
  for (long t = 2; t <= cfg.horizon; ++t)
    seq.push_back(recursion * seq[seq.size() - 1] - cfg.alpha * seq[seq.size() - 2]);
  return seq;
}

double eigen_D(double alpha, double beta, double lr, long inner_steps, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("eigen_D: lambda must be > 0");
  return 1.0 + alpha - (1.0 - std::pow(1.0 - lr * lambda, static_cast<double>(inner_steps))) * beta;
}

std::pair<double, double> root_moduli(double alpha, double d_eigen) {
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("root_moduli: alpha must be in [0, 1)");
  const double disc = d_eigen * d_eigen - 4.0 * alpha;
  if (disc < 0.0) {
    const double modulus = std::sqrt(alpha);
    return {modulus, modulus};
  }
  const double root = std::sqrt(disc);
  return {std::abs(0.5 * (d_eigen + root)), std::abs(0.5 * (d_eigen - root))};
}

VarianceSequence variance_sequence(const AnalyticConfig& cfg) {
  validate(cfg);
  const int d = cfg.problem.dim();
  const int d2 = d * d;
  const double n = static_cast<double>(cfg.group_size);
  const Matrix& a = cfg.problem.a;
  const Matrix b = matrix_B(cfg.problem, cfg.lr);
  const Matrix bm = matrix_power(b, cfg.inner_steps);
  const Matrix noise = cfg.lr * cfg.lr * a * cfg.problem.sigma * a;  // U

  // Inverse of F(X) = X - B X B applied through vec: (I - B (x) B)^-1.
  const Matrix k = Matrix::Identity(d2, d2) - kron(b, b);
  Eigen::PartialPivLU<Matrix> k_lu(k);

  // Sum_{k=0}^{m-1} F^-1(U - B^k U B^k) via linearity: one solve on the sum.
  Matrix power_sum = Matrix::Zero(d, d);
  Matrix sandwich = noise;
  for (long j = 0; j < cfg.inner_steps; ++j) {
    power_sum += noise - sandwich;
    sandwich = b * sandwich * b;
  }
  Eigen::Map<const Vector> power_sum_vec(power_sum.data(), d2);
  const Vector solved = k_lu.solve(power_sum_vec);
  Eigen::Map<const Matrix> inner_var_sum(solved.data(), d, d);

  const Matrix r_prime =
      cfg.lr * cfg.lr * a * inner_var_sum * a + static_cast<double>(cfg.inner_steps) * noise;
  Vector forcing(d2);  // R''
  Eigen::Map<const Vector> r_prime_vec(r_prime.data(), d2);
  forcing = (cfg.beta * cfg.beta / n) * r_prime_vec;

  // B_V = omega^2 (A (x) A) (I - B (x) B)^-1 (I - B^m (x) B^m).
  const Matrix bm_kron = Matrix::Identity(d2, d2) - kron(bm, bm);
  const Matrix b_v = cfg.lr * cfg.lr * kron(a, a) * k_lu.solve(bm_kron);

  const double pair_frac = (n - 1.0) / n;
  const double d_v = 1.0 + cfg.alpha * cfg.alpha - 2.0 * cfg.gamma * cfg.gamma * pair_frac;
  const Matrix c_v = (cfg.beta * cfg.beta / n) * b_v +
                     (2.0 * cfg.gamma * cfg.gamma * pair_frac * pair_frac) *
                         Matrix::Identity(d2, d2);
  const Matrix e_v =
      c_v - cfg.alpha * cfg.alpha * (1.0 - 2.0 * cfg.gamma * cfg.gamma * pair_frac) *
                Matrix::Identity(d2, d2);

  VarianceSequence out;
  out.converges = std::abs(d_v) < 1.0;

  Vector prev = Vector::Zero(d2);
  Vector curr = Vector::Zero(d2);
  out.trace.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  out.trace.push_back(0.0);
  for (long t = 1; t <= cfg.horizon; ++t) {
    Vector next = d_v * curr + e_v * prev + forcing;
    prev = std::move(curr);
    curr = std::move(next);
    out.trace.push_back(trace_of_vectorized(curr, d));
  }

  if (out.converges) {
    const Matrix fixed_point_op = (1.0 - d_v) * Matrix::Identity(d2, d2) - e_v;
    const Vector fixed_point = fixed_point_op.partialPivLu().solve(forcing);
    out.asymptote = trace_of_vectorized(fixed_point, d);
  } else {
    out.asymptote = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

AnalyticPrediction predict(const AnalyticConfig& cfg, const Vector& phi0) {
  validate(cfg);
  AnalyticPrediction prediction;
  prediction.expected_phi = expected_phi_sequence(cfg, phi0);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cfg.problem.a);
  if (es.info() != Eigen::Success) throw numeric_error("predict: eigendecomposition failed");
  bool mean_converges = true;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double d_eig = eigen_D(cfg.alpha, cfg.beta, cfg.lr, cfg.inner_steps, es.eigenvalues()(i));
    prediction.eigen_d.push_back(d_eig);
    const auto [r1, r2] = root_moduli(cfg.alpha, d_eig);
    prediction.root_moduli.push_back(r1);
    prediction.root_moduli.push_back(r2);
    if (r1 >= 1.0 || r2 >= 1.0) mean_converges = false;
  }

  const VarianceSequence var = variance_sequence(cfg);
  prediction.variance_trace = var.trace;
  prediction.variance_asymptote = var.asymptote;
  prediction.gamma_interval = gamma_bounds(cfg.alpha, cfg.group_size);
  prediction.converges = mean_converges && var.converges;
  return prediction;
}

}  // namespace noloco
