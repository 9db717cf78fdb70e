#pragma once

#include <Eigen/Sparse>
#include <string>

#include "agfem/common.hpp"

namespace agfem {

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  double rel_residual = 0.0;
};

/// Conjugate gradients with Jacobi (diagonal) preconditioning. Stops when
/// ||b - A x||_2 / ||b||_2 < tol or at maxit. Throws SolverError on
/// indefiniteness (p^T A p <= 0 or nonpositive diagonal).
PcgResult solve_pcg(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                    double tol = 1e-9, int maxit = 5000);

struct SpectralReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;  // lambda_max / lambda_min; +inf when lambda_min <= 0
  std::string method;  // "dense" or "lanczos"
  bool converged = true;  // false when Lanczos extremes did not settle
};

/// Extreme eigenvalues of a symmetric matrix: dense solve up to n = 2000,
/// otherwise 200 Lanczos iterations with full reorthogonalization.
SpectralReport spectral_report(const Eigen::SparseMatrix<double>& A);

}  // namespace agfem
