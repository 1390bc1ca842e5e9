#pragma once

// Determinant information matrix test.
//
// At the MAP estimate the Hessian estimator A (second derivatives of the
// risk) and the outer-product-of-gradients estimator B agree asymptotically
// when the model is correctly specified. The statistic
//
//   s = (1/q) log det(A^{-1} B) = (1/q) [log det B - log det A]
//
// is zero under that hypothesis. Its asymptotic variance C is estimated from
// per-examinee influence terms (first, second and third derivatives) and the
// Wald statistic W = n s^2 / C is referred to chi-square with 1 df.

#include "gimt_cdm/estimator.hpp"
#include "gimt_cdm/types.hpp"

namespace gimt_cdm {

struct InfoMatrices {
  Matrix a_hat;          // Hessian of the MAP risk (includes the prior ridge)
  Matrix b_hat;          // (1/n) sum_i g_i g_i^T, likelihood only
  Matrix per_obs_grads;  // n x q, row i = g(x_i; beta_hat)
};

struct GimtResult {
  double s_hat = 0.0;
  double c_hat = 0.0;
  double wald = 0.0;
  double p_value = 1.0;
  int df = 1;
  int n = 0;
};

struct GimtOptions {
  // Third-derivative step for parameter r is fd_scale * (1 + |beta_r|).
  double fd_scale = 1e-4;
};

// Throws DegenerateFitError when A is not positive definite, i.e. its
// smallest eigenvalue is at most 1e-10 * trace(A) / q.
InfoMatrices compute_info_matrices(const ResponseMatrix& data, const ModelSpec& spec, const ItemParams& beta_hat);

// (1/q) [log det B - log det A] via Cholesky factors. Throws MatrixError if
// either input fails to factor.
double gimt_det_stat(const Matrix& a, const Matrix& b);

// Estimated asymptotic variance of sqrt(n) (s_hat - s*). Throws VarianceError
// if the estimate is not positive and finite.
double stat_variance(const InfoMatrices& info, const ResponseMatrix& data, const ModelSpec& spec,
                     const ItemParams& beta_hat, const GimtOptions& options = {});

// p = erfc(sqrt(W / 2)), the chi-square(1) survival function.
GimtResult wald_test(double s_hat, double c_hat, int n);

// Information matrices, statistic, variance and Wald test in one call.
GimtResult gimt_det_test(const ResponseMatrix& data, const ModelSpec& spec, const ItemParams& beta_hat,
                         const GimtOptions& options = {});

// Log-determinant of a symmetric positive definite matrix; MatrixError otherwise.
double spd_log_det(const Matrix& m);

// B(beta) = (1/n) sum_i g_i g_i^T evaluated at an arbitrary beta.
Matrix outer_product_of_gradients(const MapRisk& risk, const Vector& beta, Matrix* per_obs_grads = nullptr);

} // namespace gimt_cdm
