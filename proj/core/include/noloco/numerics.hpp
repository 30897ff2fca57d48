#pragma once

#include <Eigen/Dense>

#include "noloco/rng.hpp"

namespace noloco {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Random symmetric positive definite matrix Q diag(lambda) Q^T with Q
/// Haar-uniform orthogonal (QR of a Gaussian matrix, R diagonal sign-fixed)
/// and lambda_i drawn uniformly from [eig_min, eig_max].
Matrix make_spd_matrix(int dim, double eig_min, double eig_max, RngStream& rng);

/// Error function.
double erf(double x);

/// Kronecker product, (ra*rb) x (ca*cb).
Matrix kron(const Matrix& a, const Matrix& b);

/// Factor L with L L^T = sigma for symmetric positive semi-definite sigma
/// (eigendecomposition square root; tolerant of zero eigenvalues).
/// Throws numeric_error when sigma is indefinite.
Matrix psd_factor(const Matrix& sigma);

/// Draw from N(0, sigma). Factors sigma on every call; hot paths should cache
/// psd_factor and multiply a standard normal vector themselves.
Vector sample_gaussian_vector(const Matrix& sigma, RngStream& rng);

/// exp(g) with g ~ N(mu, sigma2). Strictly positive.
double sample_lognormal(double mu, double sigma2, RngStream& rng);

Vector standard_normal_vector(int dim, RngStream& rng);

}  // namespace noloco
