#pragma once

#include <utility>
#include <vector>

#include "noloco/models.hpp"
#include "noloco/numerics.hpp"

namespace noloco {

/// Closed-form model of gossip training on the stochastic quadratic loss with
/// constant-rate SGD inner steps. The variance recursion works on vectorized
/// d x d covariances, so the dimension is capped at 16 (d^4 operator cost).
struct AnalyticConfig {
  QuadraticProblem problem;
  double lr = 0.05;       // omega
  long inner_steps = 10;  // m
  double alpha = 0.5;
  double beta = 0.7;
  double gamma = 1.0;
  int group_size = 2;  // n
  long horizon = 100;  // T outer steps
};

/// B = I - omega * A.
Matrix matrix_B(const QuadraticProblem& problem, double lr);

/// Expected slow weights over outer steps t = 0..horizon, unrolled from the
/// two-term recursion E(phi_{t+1}) = D E(phi_t) - alpha E(phi_{t-1}) with
/// D = (1 + alpha) I + beta (B^m - I) and zero initial momentum.
std::vector<Vector> expected_phi_sequence(const AnalyticConfig& cfg, const Vector& phi0);

/// Eigenvalue of D along the i-th eigendirection of A:
///   1 + alpha - (1 - (1 - omega*lambda)^m) * beta.
double eigen_D(double alpha, double beta, double lr, long inner_steps, double lambda);

/// Moduli of the characteristic roots (D +- sqrt(D^2 - 4 alpha)) / 2.
/// Complex conjugate pairs (D^2 < 4 alpha) both have modulus sqrt(alpha).
std::pair<double, double> root_moduli(double alpha, double d_eigen);

struct VarianceSequence {
  std::vector<double> trace;  // trace of Cov(phi_t), t = 0..horizon
  double asymptote = 0.0;     // fixed-point trace (NaN when the recursion diverges)
  bool converges = false;     // |d_V| < 1, i.e. gamma inside the stability interval
};

/// Vectorized covariance recursion
///   u_{t+1} = d_V u_t + E_V u_{t-1} + R''
/// with d_V = 1 + alpha^2 - 2 gamma^2 (n-1)/n and the forcing term assembled
/// from the inner-phase gradient noise. Out-of-interval gamma yields a
/// diverging sequence flagged converges=false instead of an error.
VarianceSequence variance_sequence(const AnalyticConfig& cfg);

struct AnalyticPrediction {
  std::vector<Vector> expected_phi;
  std::vector<double> variance_trace;
  std::vector<double> eigen_d;      // one per eigenvalue of A, ascending
  std::vector<double> root_moduli;  // interleaved |r1|, |r2| per eigendirection
  std::pair<double, double> gamma_interval{0.0, 0.0};
  double variance_asymptote = 0.0;
  bool converges = false;
};

AnalyticPrediction predict(const AnalyticConfig& cfg, const Vector& phi0);

}  // namespace noloco
