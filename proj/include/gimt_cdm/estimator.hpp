#pragma once

// MAP estimation of DINA item parameters:
//
//   risk(beta) = -(1/n) log p(beta) + (1/n) sum_i c(x_i; beta)
//
// with p(beta) the product of per-item N(mu, sigma2 I_2) densities. The
// minimizer is found by BFGS with a strong-Wolfe line search (cubic
// interpolation); the analytic Hessian is evaluated only at the end, to
// certify a strict local minimum.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gimt_cdm/dina.hpp"
#include "gimt_cdm/types.hpp"

namespace gimt_cdm {

// Empirical MAP risk for one data set and model. Sums over examinees run in
// row order, so results are bit-reproducible for identical inputs.
class MapRisk {
public:
  MapRisk(const ResponseMatrix& data, const ModelSpec& spec);

  double value(const Vector& beta) const;
  double value_and_grad(const Vector& beta, Vector& grad) const;
  Matrix hessian(const Vector& beta) const;

  // log p(beta), including the Gaussian normalizing constant.
  double log_param_prior(const Vector& beta) const;

  const DinaLikelihood& likelihood() const { return likelihood_; }
  const ResponseMatrix& data() const { return data_; }
  const ModelSpec& spec() const { return spec_; }
  int examinees() const { return data_.examinees(); }
  int num_params() const { return spec_.num_params(); }

private:
  void check(const Vector& beta) const;

  const ResponseMatrix& data_;
  const ModelSpec& spec_;
  DinaLikelihood likelihood_;
};

double map_risk(const ItemParams& beta, const ResponseMatrix& data, const ModelSpec& spec);
Vector map_risk_grad(const ItemParams& beta, const ResponseMatrix& data, const ModelSpec& spec);
Matrix map_risk_hessian(const ItemParams& beta, const ResponseMatrix& data, const ModelSpec& spec);

struct FitConfig {
  enum class Init { PriorMean, Supplied };

  int max_iters = 500;
  double grad_tol = 1e-6;  // sup-norm of the risk gradient
  double step_tol = 1e-10; // sup-norm of the accepted step
  Init init = Init::PriorMean;
  std::optional<ItemParams> supplied_init;
  // Extra starts jittered around the prior mean; the lowest converged risk wins.
  int random_restarts = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  ItemParams beta_hat;
  double risk = 0.0;
  double grad_norm = 0.0;  // sup-norm
  int iterations = 0;
  bool converged = false;
  double hessian_min_eig = 0.0;
  double hessian_condition = 0.0;
  std::string message;
  std::vector<double> risk_trace;  // risk after each accepted step, starting at the initial point
};

// Deterministic given (data, spec, config). converged requires both the
// gradient tolerance and a positive definite Hessian at the returned point.
// Throws OptimizationError if the risk becomes non-finite.
FitResult fit(const ResponseMatrix& data, const ModelSpec& spec, const FitConfig& config = {});

} // namespace gimt_cdm
