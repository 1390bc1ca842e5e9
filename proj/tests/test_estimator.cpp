#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gimt_cdm/errors.hpp"
#include "gimt_cdm/estimator.hpp"
#include "gimt_cdm/sim.hpp"
#include "library_adapters.hpp"
#include "oracles.hpp"

using namespace gimt_cdm;

namespace {

QMatrix small_q() {
  return QMatrix(BinaryMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}}));
}

ItemParams dgp_params(int items) {
  Vector flat(2 * items);
  for (int j = 0; j < items; ++j) {
    flat[2 * j] = 3.0 + 0.2 * (j % 3);
    flat[2 * j + 1] = 1.4 - 0.1 * (j % 2);
  }
  return ItemParams(flat);
}

ResponseMatrix simulate(const ModelSpec& spec, const ItemParams& beta, int n, std::uint64_t seed) {
  const DgpModel dgp{spec, beta, seed};
  RandomStream stream = RandomStream::derive(seed, {1});
  return sample_dataset(dgp, n, stream);
}

oracle::Instance as_instance(const ModelSpec& spec, const ResponseMatrix& data, int row, const ItemParams& beta) {
  oracle::Instance in;
  in.items = spec.items();
  in.skills = spec.skills();
  in.q.assign(in.items, std::vector<int>(in.skills));
  for (int j = 0; j < in.items; ++j)
    for (int k = 0; k < in.skills; ++k) in.q[j][k] = spec.q(j, k);
  in.eta = adapt::stdvec(spec.attribute_prior.eta);
  in.beta = adapt::stdvec(beta.flat());
  for (int j = 0; j < in.items; ++j) in.x.push_back(data(row, j));
  return in;
}

// -(1/n) log p(beta) + mean c, term by term.
double risk_oracle(const ModelSpec& spec, const ResponseMatrix& data, const ItemParams& beta) {
  const int n = data.examinees();
  const double s2 = spec.param_prior.sigma2;
  double log_prior = 0.0;
  for (int j = 0; j < beta.items(); ++j) {
    const double ds = beta.slope(j) - spec.param_prior.mu[0];
    const double di = beta.intercept(j) - spec.param_prior.mu[1];
    log_prior += -std::log(2.0 * std::numbers::pi * s2) - (ds * ds + di * di) / (2.0 * s2);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto in = as_instance(spec, data, i, beta);
    total += oracle::marginal_negloglik(in, in.beta);
  }
  return -log_prior / n + total / n;
}

} // namespace

TEST_CASE("risk matches a term-by-term oracle") {
  const ModelSpec spec = default_spec(small_q());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  const ResponseMatrix data = simulate(spec, dgp_params(6), 40, 9);
  for (int t = 0; t < 10; ++t) {
    Vector flat(12);
    for (auto& v : flat) v = ud(rng);
    const ItemParams beta(flat);
    CHECK(map_risk(beta, data, spec) == doctest::Approx(risk_oracle(spec, data, beta)).epsilon(1e-12));
  }
}

TEST_CASE("single examinee at the prior mean pays only the normalizer") {
  QMatrix q(BinaryMatrix::from_rows({{1}}));
  const ModelSpec spec = default_spec(q);
  ResponseMatrix data(BinaryMatrix::from_rows({{1}}));
  const ItemParams at_mu = ItemParams::uniform(1, 1.2, 0.6);
  const double c = marginal_negloglik_per_obs(data.row(0), at_mu, q, spec.attribute_prior);
  CHECK(map_risk(at_mu, data, spec) == doctest::Approx(c + std::log(2.0 * std::numbers::pi * 4500.0)).epsilon(1e-14));
}

TEST_CASE("flat prior limit: only the normalizer survives") {
  ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 30, 4);
  const ItemParams beta = dgp_params(6);
  double mean_c = 0.0;
  for (int i = 0; i < data.examinees(); ++i) {
    mean_c += marginal_negloglik_per_obs(data.row(i), beta, spec.q, spec.attribute_prior);
  }
  mean_c /= data.examinees();
  for (double s2 : {1e4, 1e8, 1e12}) {
    spec.param_prior.sigma2 = s2;
    const double normalizer = beta.items() * std::log(2.0 * std::numbers::pi * s2) / data.examinees();
    const double quadratic = map_risk(beta, data, spec) - normalizer - mean_c;
    CHECK(quadratic >= -1e-12);
    CHECK(quadratic < 10.0 / s2);
  }
}

TEST_CASE("risk gradient and Hessian agree with finite differences") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 50, 21);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Vector flat(12);
    for (auto& v : flat) v = nd(rng);
    const ItemParams beta(flat);
    const Vector g = map_risk_grad(beta, data, spec);
    const Vector fd = oracle::central_gradient(
        [&](const Vector& b) { return risk_oracle(spec, data, ItemParams(b)); }, flat, 1e-5);
    CHECK((g - fd).norm() / fd.norm() < 1e-6);
    const Matrix h = map_risk_hessian(beta, data, spec);
    const Matrix fdh = oracle::central_jacobian(
        [&](const Vector& b) { return map_risk_grad(ItemParams(b), data, spec); }, flat, 1e-5);
    CHECK((h - fdh).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("prior gradient vanishes at the prior mean") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 25, 2);
  const ItemParams at_mu = ItemParams::uniform(6, 1.2, 0.6);
  Vector mean_g = Vector::Zero(12);
  for (int i = 0; i < data.examinees(); ++i) {
    mean_g += grad_per_obs(data.row(i), at_mu, spec.q, spec.attribute_prior);
  }
  mean_g /= data.examinees();
  CHECK((map_risk_grad(at_mu, data, spec) - mean_g).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fit converges with a positive definite Hessian and a decreasing risk trace") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 400, 5);
  const FitResult f = fit(data, spec);
  REQUIRE(f.converged);
  CHECK(f.grad_norm <= 1e-6);
  CHECK(f.hessian_min_eig > 0.0);
  CHECK(map_risk_grad(f.beta_hat, data, spec).lpNorm<Eigen::Infinity>() == doctest::Approx(f.grad_norm));
  CHECK(f.risk == doctest::Approx(map_risk(f.beta_hat, data, spec)).epsilon(1e-14));
  REQUIRE(f.risk_trace.size() >= 2);
  for (std::size_t k = 1; k < f.risk_trace.size(); ++k) {
    CHECK(f.risk_trace[k] <= f.risk_trace[k - 1]);
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(map_risk_hessian(f.beta_hat, data, spec));
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(f.hessian_min_eig).epsilon(1e-8));
}

TEST_CASE("refitting from the estimate is a fixed point") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 300, 6);
  const FitResult first = fit(data, spec);
  REQUIRE(first.converged);
  FitConfig cfg;
  cfg.init = FitConfig::Init::Supplied;
  cfg.supplied_init = first.beta_hat;
  const FitResult again = fit(data, spec, cfg);
  CHECK(again.converged);
  CHECK(again.iterations <= 2);
}

TEST_CASE("fit is deterministic and insensitive to examinee order") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 300, 8);
  const FitResult a = fit(data, spec);
  const FitResult b = fit(data, spec);
  CHECK(a.beta_hat.flat() == b.beta_hat.flat());

  std::vector<int> order(data.examinees());
  for (int i = 0; i < data.examinees(); ++i) order[i] = i;
  std::mt19937_64 rng(1);
  std::shuffle(order.begin(), order.end(), rng);
  ResponseMatrix shuffled(data.examinees(), data.items());
  for (int i = 0; i < data.examinees(); ++i)
    for (int j = 0; j < data.items(); ++j) shuffled.set(i, j, data(order[i], j));
  FitConfig tight;
  tight.grad_tol = 1e-10;
  const FitResult c = fit(data, spec, tight);
  const FitResult d = fit(shuffled, spec, tight);
  CHECK((c.beta_hat.flat() - d.beta_hat.flat()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("a tight prior pins the estimate to the prior mean") {
  ModelSpec spec = default_spec(small_q());
  spec.param_prior.sigma2 = 1e-6;
  const ResponseMatrix data = simulate(spec, dgp_params(6), 5, 3);
  const FitResult f = fit(data, spec);
  CHECK(f.converged);
  for (int j = 0; j < 6; ++j) {
    CHECK(f.beta_hat.slope(j) == doctest::Approx(1.2).epsilon(1e-4));
    CHECK(f.beta_hat.intercept(j) == doctest::Approx(0.6).epsilon(1e-4));
  }
}

TEST_CASE("random restarts keep the best converged start") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 200, 12);
  FitConfig cfg;
  const FitResult single = fit(data, spec, cfg);
  cfg.random_restarts = 3;
  cfg.seed = 77;
  const FitResult multi = fit(data, spec, cfg);
  CHECK(multi.converged);
  CHECK(multi.risk <= single.risk + 1e-12);
}

TEST_CASE("estimator errors") {
  const ModelSpec spec = default_spec(small_q());
  const ResponseMatrix data = simulate(spec, dgp_params(6), 10, 1);
  CHECK_THROWS_AS(map_risk(ItemParams::uniform(5, 1.0, 0.0), data, spec), DimensionError);
  ResponseMatrix narrow(4, 5);
  CHECK_THROWS_AS(map_risk(ItemParams::uniform(6, 1.0, 0.0), narrow, spec), DimensionError);

  FitConfig bad;
  bad.grad_tol = 0.0;
  CHECK_THROWS(fit(data, spec, bad));

  FitConfig far;
  far.init = FitConfig::Init::Supplied;
  far.supplied_init = ItemParams::uniform(6, 1e300, 0.0);
  CHECK_THROWS_AS(fit(data, spec, far), OptimizationError);
}
