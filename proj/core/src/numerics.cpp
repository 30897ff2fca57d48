#include "noloco/numerics.hpp"

#include <cmath>
#include <stdexcept>

#include "noloco/error.hpp"

namespace noloco {

Matrix make_spd_matrix(int dim, double eig_min, double eig_max, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("make_spd_matrix: dim must be >= 1");
  if (!(eig_min > 0.0)) throw std::invalid_argument("make_spd_matrix: eig_min must be > 0");
  if (!(eig_max >= eig_min))
    throw std::invalid_argument("make_spd_matrix: eig_max must be >= eig_min");

  Matrix gauss(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) gauss(i, j) = rng.normal();

  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;

  Vector eigs(dim);
  for (int i = 0; i < dim; ++i) eigs(i) = eig_min + (eig_max - eig_min) * rng.uniform();

  Matrix m = q * eigs.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

double erf(double x) { return std::erf(x); }

Matrix kron(const Matrix& a, const Matrix& b) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("kron: empty operand");
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix psd_factor(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw shape_error("psd_factor: matrix must be square");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw shape_error("psd_factor: matrix must be symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.info() != Eigen::Success) throw numeric_error("psd_factor: eigendecomposition failed");
  const Vector& eigs = es.eigenvalues();
  const double tol = 1e-10 * scale;
  Vector roots(eigs.size());
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    if (eigs(i) < -tol) throw numeric_error("psd_factor: matrix is not positive semi-definite");
    roots(i) = std::sqrt(std::max(eigs(i), 0.0));
  }
  return es.eigenvectors() * roots.asDiagonal();
}

Vector sample_gaussian_vector(const Matrix& sigma, RngStream& rng) {
  const Matrix factor = psd_factor(sigma);
  return factor * standard_normal_vector(static_cast<int>(sigma.rows()), rng);
}

double sample_lognormal(double mu, double sigma2, RngStream& rng) {
  return rng.lognormal(mu, sigma2);
}

Vector standard_normal_vector(int dim, RngStream& rng) {
  Vector z(dim);
  for (int i = 0; i < dim; ++i) z(i) = rng.normal();
  return z;
}

}  // namespace noloco
