#include "gimt_cdm/gimt.hpp"

#include <cmath>
#include <limits>

namespace gimt_cdm {

namespace {

constexpr double kSpdRelTol = 1e-10;

// Smallest eigenvalue must exceed kSpdRelTol * trace / q.
bool spd_within_tolerance(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    return false;
  }
  const double threshold = kSpdRelTol * m.trace() / static_cast<double>(m.rows());
  return eig.eigenvalues().minCoeff() > threshold && threshold > 0.0;
}

Matrix spd_inverse(const Matrix& m, const char* name) {
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw MatrixError(std::string(name) + " is not positive definite");
  }
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

// Frobenius inner product, i.e. tr(X Y) for symmetric X.
double trace_product(const Matrix& x, const Matrix& y) {
  return x.cwiseProduct(y).sum();
}

} // namespace

double spd_log_det(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw MatrixError("log-determinant needs a non-empty square matrix");
  }
  if (!m.allFinite()) {
    throw MatrixError("matrix has non-finite entries");
  }
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success || !spd_within_tolerance(m)) {
    throw MatrixError("matrix is not symmetric positive definite");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double gimt_det_stat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("A and B must have the same shape");
  }
  const double q = static_cast<double>(a.rows());
  return (spd_log_det(b) - spd_log_det(a)) / q;
}

Matrix outer_product_of_gradients(const MapRisk& risk, const Vector& beta, Matrix* per_obs_grads) {
  const auto& model = risk.likelihood();
  const auto table = model.tabulate(ItemParams(beta));
  const int n = risk.examinees();
  const int q = risk.num_params();
  Matrix grads(n, q);
  Vector gi;
  for (int i = 0; i < n; ++i) {
    model.evaluate(risk.data().row(i), table, &gi);
    grads.row(i) = gi.transpose();
  }
  Matrix b = grads.transpose() * grads / static_cast<double>(n);
  if (per_obs_grads != nullptr) {
    *per_obs_grads = std::move(grads);
  }
  return b;
}

InfoMatrices compute_info_matrices(const ResponseMatrix& data, const ModelSpec& spec, const ItemParams& beta_hat) {
  const MapRisk risk(data, spec);
  InfoMatrices info;
  info.a_hat = risk.hessian(beta_hat.flat());
  if (!spd_within_tolerance(info.a_hat)) {
    throw DegenerateFitError("Hessian of the risk is not positive definite at the estimate");
  }
  info.b_hat = outer_product_of_gradients(risk, beta_hat.flat(), &info.per_obs_grads);
  return info;
}

double stat_variance(const InfoMatrices& info, const ResponseMatrix& data, const ModelSpec& spec,
                     const ItemParams& beta_hat, const GimtOptions& options) {
  const MapRisk risk(data, spec);
  const int n = risk.examinees();
  const int q = risk.num_params();
  if (info.per_obs_grads.rows() != n || info.per_obs_grads.cols() != q) {
    throw DimensionError("per-observation gradients do not match the data");
  }
  const Matrix a_inv = spd_inverse(info.a_hat, "A_hat");
  const Matrix b_inv = spd_inverse(info.b_hat, "B_hat");
  const Vector& beta = beta_hat.flat();

  // Sensitivity of s(A(beta), B(beta)) to the parameters:
  //   d_r = (1/q) [tr(B^{-1} dB/dbeta_r) - tr(A^{-1} dA/dbeta_r)]
  // with dA (third derivatives) and dB by central differences.
  Vector d(q);
  for (int r = 0; r < q; ++r) {
    const double h = options.fd_scale * (1.0 + std::abs(beta[r]));
    Vector plus = beta;
    Vector minus = beta;
    plus[r] += h;
    minus[r] -= h;
    const Matrix da = (risk.hessian(plus) - risk.hessian(minus)) / (2.0 * h);
    const Matrix db = (outer_product_of_gradients(risk, plus) - outer_product_of_gradients(risk, minus)) / (2.0 * h);
    d[r] = (trace_product(b_inv, db) - trace_product(a_inv, da)) / q;
  }
  // beta_hat - beta* ~ -A^{-1} mean(g_i), so the estimation effect enters
  // each influence term as -d^T A^{-1} g_i.
  const Vector a_inv_d = a_inv * d;

  const auto& model = risk.likelihood();
  const auto table = model.tabulate(beta_hat);
  Vector infl(n);
  Vector gi;
  Matrix hi;
  for (int i = 0; i < n; ++i) {
    model.evaluate(data.row(i), table, &gi, &hi);
    const Vector g_row = info.per_obs_grads.row(i).transpose();
    const double quad_b = g_row.dot(b_inv * g_row);
    const double tr_a = trace_product(a_inv, hi);
    infl[i] = (quad_b - tr_a) / q - a_inv_d.dot(g_row);
  }
  const double mean = infl.mean();
  const double c_hat = (infl.array() - mean).square().sum() / static_cast<double>(n);
  const double scale = 1e-12 * infl.cwiseAbs().maxCoeff();
  if (!std::isfinite(c_hat) || c_hat <= scale * scale) {
    throw VarianceError("influence-function variance is zero or not finite");
  }
  return c_hat;
}

GimtResult wald_test(double s_hat, double c_hat, int n) {
  if (!(c_hat > 0.0) || !std::isfinite(c_hat)) {
    throw VarianceError("Wald test needs a positive finite variance");
  }
  if (n < 1) {
    throw Error("Wald test needs n >= 1");
  }
  GimtResult r;
  r.s_hat = s_hat;
  r.c_hat = c_hat;
  r.n = n;
  r.wald = n * s_hat * s_hat / c_hat;
  r.p_value = std::erfc(std::sqrt(r.wald / 2.0));
  r.df = 1;
  return r;
}

GimtResult gimt_det_test(const ResponseMatrix& data, const ModelSpec& spec, const ItemParams& beta_hat,
                         const GimtOptions& options) {
  const InfoMatrices info = compute_info_matrices(data, spec, beta_hat);
  const double s_hat = gimt_det_stat(info.a_hat, info.b_hat);
  const double c_hat = stat_variance(info, data, spec, beta_hat, options);
  return wald_test(s_hat, c_hat, data.examinees());
}

} // namespace gimt_cdm
