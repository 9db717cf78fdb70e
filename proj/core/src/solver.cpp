#include "agfem/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace agfem {

namespace {

// Smallest eigenvalue of the symmetric tridiagonal with diagonal d and
// off-diagonal e, by Sturm-count bisection.
double tridiag_lambda_min(const std::vector<double>& d, const std::vector<double>& e) {
  const int n = int(d.size());
  double lo = d[0], hi = d[0];
  for (int i = 0; i < n; ++i) {
    const double w = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - w);
    hi = std::max(hi, d[i] + w);
  }
  auto count_below = [&](double x) {
    int count = 0;
    double q = d[0] - x;
    if (q < 0.0) ++count;
    for (int i = 1; i < n; ++i) {
      const double den = (q == 0.0) ? 1e-300 : q;
      q = d[i] - x - e[i - 1] * e[i - 1] / den;
      if (q < 0.0) ++count;
    }
    return count;
  };
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (count_below(mid) >= 1 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

PcgResult solve_pcg(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                    double tol, int maxit) {
  const int n = int(A.rows());
  PcgResult res;
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) {
    const double d = A.coeff(i, i);
    if (!(d > 0.0)) {
      throw SolverError("solve_pcg: nonpositive diagonal entry at row " +
                        std::to_string(i));
    }
    dinv(i) = 1.0 / d;
  }

  // Besides the residual test, the loop controls the energy-norm error
  // through the Gauss-quadrature bound ||e||_A^2 <= r'z / lambda_min(T), with
  // T the CG-Lanczos tridiagonal of the preconditioned operator. This keeps
  // e.g. affine exactness at the level of the requested tolerance instead of
  // tol * ||b|| / (sqrt(lambda_min) ||u||_A).
  std::vector<double> tri_d, tri_e;
  double xAx = 0.0;
  double lambda_min_est = 0.0;
  int lambda_stamp = -1;

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = dinv.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  double alpha_prev = 0.0, beta_prev = 0.0;
  for (int it = 0; it < maxit; ++it) {
    const Eigen::VectorXd Ap = A * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) {
      throw SolverError("solve_pcg: matrix is not positive definite (p^T A p = " +
                        std::to_string(pAp) + ")");
    }
    const double alpha = rz / pAp;
    res.x += alpha * p;
    xAx += alpha * rz;
    tri_d.push_back(1.0 / alpha + (it > 0 ? beta_prev / alpha_prev : 0.0));

    r -= alpha * Ap;
    res.iterations = it + 1;
    res.rel_residual = r.norm() / bnorm;

    z = dinv.cwiseProduct(r);
    const double rz_next = r.dot(z);
    const double beta = rz_next / rz;
    tri_e.push_back(std::sqrt(std::max(beta, 0.0)) / alpha);

    if (res.rel_residual < tol) {
      if (lambda_stamp < 0 || it + 1 - lambda_stamp > 20) {
        lambda_min_est = tridiag_lambda_min(tri_d, tri_e);
        lambda_stamp = it + 1;
      }
      const double err_energy2 = rz_next / std::max(lambda_min_est, 1e-300);
      if (err_energy2 <= 0.1 * tol * tol * std::max(xAx, 1e-300) || rz_next == 0.0) {
        res.converged = true;
        return res;
      }
    }

    p = z + beta * p;
    rz = rz_next;
    alpha_prev = alpha;
    beta_prev = beta;
  }
  res.rel_residual = (b - A * res.x).norm() / bnorm;
  res.converged = res.rel_residual < tol;
  return res;
}

namespace {

SpectralReport lanczos_extremes(const Eigen::SparseMatrix<double>& A, int max_iter) {
  const int n = int(A.rows());
  SpectralReport rep;
  rep.method = "lanczos";

  // Deterministic start vector with all symmetry classes populated.
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.37 * std::sin(1.0 + i);
  v.normalize();

  const int m = std::min(max_iter, n);
  Eigen::MatrixXd V(n, m);
  Eigen::VectorXd alpha(m), beta(m);
  double prev_min = 0.0, prev_max = 0.0;
  int k = 0;
  for (; k < m; ++k) {
    V.col(k) = v;
    Eigen::VectorXd w = A * v;
    alpha(k) = v.dot(w);
    w -= alpha(k) * v;
    if (k > 0) w -= beta(k - 1) * V.col(k - 1);
    // Full reorthogonalization, twice for safety.
    for (int pass = 0; pass < 2; ++pass) {
      w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
    }
    beta(k) = w.norm();
    if (beta(k) < 1e-14) {
      ++k;
      break;  // invariant subspace found: extremes are exact
    }
    v = w / beta(k);

    if ((k + 1) % 20 == 0 || k + 1 == m) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (int i = 0; i <= k; ++i) {
        T(i, i) = alpha(i);
        if (i < k) T(i, i + 1) = T(i + 1, i) = beta(i);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues().minCoeff();
      const double lmax = es.eigenvalues().maxCoeff();
      const double scale = std::max(std::abs(lmax), std::abs(lmin));
      if (k + 1 > 40 && std::abs(lmin - prev_min) < 1e-8 * scale &&
          std::abs(lmax - prev_max) < 1e-8 * scale) {
        rep.lambda_min = lmin;
        rep.lambda_max = lmax;
        rep.converged = true;
        rep.kappa = rep.lambda_min > 0.0 ? rep.lambda_max / rep.lambda_min
                                         : std::numeric_limits<double>::infinity();
        return rep;
      }
      prev_min = lmin;
      prev_max = lmax;
    }
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = alpha(i);
    if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  rep.lambda_min = es.eigenvalues().minCoeff();
  rep.lambda_max = es.eigenvalues().maxCoeff();
  rep.converged = k < std::min(max_iter, n);  // true only via breakdown
  rep.kappa = rep.lambda_min > 0.0 ? rep.lambda_max / rep.lambda_min
                                   : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace

SpectralReport spectral_report(const Eigen::SparseMatrix<double>& A) {
  const int n = int(A.rows());
  if (n == 0) throw ParameterError("spectral_report: empty matrix");
  if (n <= 2000) {
    SpectralReport rep;
    rep.method = "dense";
    Eigen::MatrixXd D(A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
    rep.lambda_min = es.eigenvalues().minCoeff();
    rep.lambda_max = es.eigenvalues().maxCoeff();
    rep.kappa = rep.lambda_min > 0.0 ? rep.lambda_max / rep.lambda_min
                                     : std::numeric_limits<double>::infinity();
    return rep;
  }
  return lanczos_extremes(A, 200);
}

}  // namespace agfem
