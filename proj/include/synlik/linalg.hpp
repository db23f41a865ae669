#pragma once

#include <Eigen/Dense>
#include <vector>

namespace synlik::linalg {

/// Least squares min ||A x - b|| subject to x_j >= 0 for every j with
/// `nonnegative[j]` set; the remaining coordinates are unconstrained.
/// Lawson-Hanson active set; free coordinates are split into positive and
/// negative parts internally.
Eigen::VectorXd bounded_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      const std::vector<bool>& nonnegative);

/// Plain NNLS (all coordinates constrained).
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// Symmetric and smallest eigenvalue >= -tol (after symmetrization).
bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-10);

/// Inverse of a symmetric matrix after adding `ridge_scale * trace / n` to the
/// diagonal when it is not positive definite. Sets `*ridged` when the ridge
/// was needed.
Eigen::MatrixXd ridged_inverse(const Eigen::MatrixXd& m, double ridge_scale, bool* ridged);

/// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition.
Eigen::MatrixXd pseudo_inverse_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

/// Log-determinant from a Cholesky factorization. Throws
/// NotPositiveDefiniteError if the factorization fails.
double log_det_spd(const Eigen::MatrixXd& m);

}  // namespace synlik::linalg
