#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gimt_cdm/errors.hpp"
#include "gimt_cdm/sim.hpp"

using namespace gimt_cdm;

namespace {

QMatrix test_q() {
  return QMatrix(BinaryMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}}));
}

ItemParams test_params() {
  Vector flat(12);
  for (int j = 0; j < 6; ++j) {
    flat[2 * j] = 2.6 + 0.3 * (j % 3);
    flat[2 * j + 1] = 1.2 + 0.2 * (j % 2);
  }
  return ItemParams(flat);
}

double column_mean(const ResponseMatrix& x, int j) {
  double s = 0.0;
  for (int i = 0; i < x.examinees(); ++i) s += x(i, j);
  return s / x.examinees();
}

// P(x_j = 1) = sum_alpha P(alpha) P(x_j = 1 | alpha), from the definitions.
double marginal_item_mean(const QMatrix& q, const AttributePrior& prior, const ItemParams& beta, int j) {
  const int k_count = q.skills();
  double total = 0.0;
  for (int a = 0; a < (1 << k_count); ++a) {
    double mass = 1.0;
    int ideal = 1;
    for (int k = 0; k < k_count; ++k) {
      const double m = 1.0 / (1.0 + std::exp(prior.eta[k]));
      const bool has = (a >> k) & 1;
      mass *= has ? m : 1.0 - m;
      if (q(j, k) == 1 && !has) ideal = 0;
    }
    total += mass / (1.0 + std::exp(-(beta.slope(j) * ideal - beta.intercept(j))));
  }
  return total;
}

PerturbationPlan small_plan() {
  PerturbationPlan plan;
  plan.flip_levels = {0.0, 0.2};
  plan.replications_per_level = 2;
  plan.datasets_per_replication = 2;
  plan.n_per_dataset = 150;
  plan.seed = 42;
  return plan;
}

bool same_statistics(const CellResult& a, const CellResult& b) {
  if (a.status != b.status || a.gimt.has_value() != b.gimt.has_value()) return false;
  if (!a.gimt) return true;
  return a.gimt->s_hat == b.gimt->s_hat && a.gimt->c_hat == b.gimt->c_hat && a.gimt->wald == b.gimt->wald &&
         a.min_eig == b.min_eig;
}

} // namespace

TEST_CASE("certain-correct items produce all ones") {
  const QMatrix q = test_q();
  const DgpModel dgp{default_spec(q), ItemParams::uniform(6, 0.0, -10.0), 1};
  RandomStream stream(3);
  const ResponseMatrix x = sample_dataset(dgp, 10000, stream);
  for (int j = 0; j < 6; ++j) CHECK(column_mean(x, j) > 0.999);
}

TEST_CASE("with no mastery every item responds at its guess rate") {
  ModelSpec spec = default_spec(test_q());
  spec.attribute_prior.eta = Vector::Constant(3, 20.0);
  const ItemParams beta = test_params();
  const DgpModel dgp{spec, beta, 1};
  RandomStream stream(4);
  const int n = 20000;
  const ResponseMatrix x = sample_dataset(dgp, n, stream);
  for (int j = 0; j < 6; ++j) {
    const double guess = 1.0 / (1.0 + std::exp(beta.intercept(j)));
    const double se = std::sqrt(guess * (1.0 - guess) / n);
    CHECK(std::abs(column_mean(x, j) - guess) < 4.0 * se);
  }
}

TEST_CASE("item means match the enumerated marginal probabilities") {
  const ModelSpec spec = default_spec(test_q());
  const ItemParams beta = test_params();
  const DgpModel dgp{spec, beta, 1};
  RandomStream stream = RandomStream::derive(5, {1, 2});
  const int n = 100000;
  const ResponseMatrix x = sample_dataset(dgp, n, stream);
  for (int j = 0; j < 6; ++j) {
    const double p = marginal_item_mean(spec.q, spec.attribute_prior, beta, j);
    CHECK(std::abs(column_mean(x, j) - p) < 3.0 * std::sqrt(p * (1.0 - p) / n));
  }
}

TEST_CASE("sampling is a function of the stream") {
  const DgpModel dgp{default_spec(test_q()), test_params(), 1};
  RandomStream a = RandomStream::derive(9, {1});
  RandomStream b = RandomStream::derive(9, {1});
  RandomStream c = RandomStream::derive(9, {2});
  const ResponseMatrix xa = sample_dataset(dgp, 50, a);
  CHECK(xa == sample_dataset(dgp, 50, b));
  CHECK_FALSE(xa == sample_dataset(dgp, 50, c));
}

TEST_CASE("random streams: uniform range, normal moments, derivation") {
  RandomStream s(123);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    const double z = s.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
  CHECK(RandomStream::derive(1, {2, 3}).next() == RandomStream::derive(1, {2, 3}).next());
  CHECK(RandomStream::derive(1, {2, 3}).next() != RandomStream::derive(1, {3, 2}).next());
}

TEST_CASE("perturbation at level zero and one") {
  const QMatrix q = test_q();
  RandomStream s(1);
  const PerturbedQ none = perturb_q(q, 0.0, s);
  CHECK(none.q == q);
  CHECK(none.flips == 0);

  const PerturbedQ all = perturb_q(q, 1.0, s);
  CHECK(all.flips == 18);
  for (int j = 0; j < q.items(); ++j)
    for (int k = 0; k < q.skills(); ++k) CHECK(all.q(j, k) == 1 - q(j, k));
}

TEST_CASE("perturbation Hamming distance follows the binomial mean") {
  const QMatrix q(BinaryMatrix::from_rows(std::vector<std::vector<int>>(15, {1, 1, 0, 1, 0})));
  const double p = 0.1;
  const int draws = 2000;
  double total = 0.0;
  int rejected = 0;
  for (int d = 0; d < draws; ++d) {
    RandomStream s = RandomStream::derive(77, {static_cast<std::uint64_t>(d)});
    const PerturbedQ out = perturb_q(q, p, s);
    int hamming = 0;
    for (int j = 0; j < 15; ++j)
      for (int k = 0; k < 5; ++k) hamming += out.q(j, k) != q(j, k);
    CHECK(hamming == out.flips);
    CHECK_FALSE(out.q.has_empty_row());
    total += hamming;
    rejected += out.rejected_draws;
  }
  // Rejections need a row with all three ones flipped and both zeros kept: rare.
  const double cells = 75.0;
  const double sd = std::sqrt(cells * p * (1.0 - p) / draws);
  CHECK(std::abs(total / draws - cells * p) < 3.0 * sd + 0.01 * rejected);
}

TEST_CASE("perturbation retry budget") {
  const QMatrix full(BinaryMatrix::from_rows({{1, 1}, {1, 0}}));
  RandomStream s(1);
  CHECK_THROWS_AS(perturb_q(full, 1.0, s, 5), PerturbationError);
  CHECK_THROWS_AS(perturb_q(full, 1.5, s), PerturbationError);
}

TEST_CASE("level keys") {
  CHECK(level_key(0.0) == 0);
  CHECK(level_key(0.01) == 10000);
  CHECK(level_key(0.2) == 200000);
  CHECK(level_key(0.15) == level_key(0.1 + 0.05));
}

TEST_CASE("grid shape and labels") {
  PerturbationPlan defaults;
  CHECK(defaults.cell_count() == 1500);
  CHECK(defaults.flip_levels.size() == 6);
  CHECK(defaults.n_per_dataset == 536);

  const DgpModel dgp{default_spec(test_q()), test_params(), 3};
  const PerturbationPlan plan = small_plan();
  const auto cells = run_grid(dgp, plan, FitConfig{});
  REQUIRE(cells.size() == 8);
  std::size_t idx = 0;
  for (double level : plan.flip_levels) {
    for (int r = 0; r < 2; ++r) {
      for (int d = 0; d < 2; ++d) {
        const CellResult& c = cells[idx++];
        CHECK(c.level == level);
        CHECK(c.replication == r);
        CHECK(c.dataset == d);
        CHECK((c.label == CellLabel::Correct) == (level == 0.0));
        if (level == 0.0) CHECK(c.q_flips == 0);
        CHECK(c.ok() == c.gimt.has_value());
      }
    }
  }
}

TEST_CASE("grid is reproducible, independent of workers and of other levels") {
  const DgpModel dgp{default_spec(test_q()), test_params(), 3};
  const PerturbationPlan plan = small_plan();
  const auto a = run_grid(dgp, plan, FitConfig{}, 1);
  const auto b = run_grid(dgp, plan, FitConfig{}, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_statistics(a[i], b[i]));

  PerturbationPlan only = plan;
  only.flip_levels = {0.2};
  const auto c = run_grid(dgp, only, FitConfig{}, 1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(same_statistics(c[i], a[4 + i]));
    CHECK(c[i].q_flips == a[4 + i].q_flips);
  }
}

TEST_CASE("shared datasets reuse draws across replications") {
  PerturbationPlan plan = small_plan();
  plan.share_datasets_within_level = true;
  RandomStream r0 = data_stream(plan, 0.2, 0, 1);
  RandomStream r1 = data_stream(plan, 0.2, 1, 1);
  CHECK(r0.next() == r1.next());
  plan.share_datasets_within_level = false;
  RandomStream f0 = data_stream(plan, 0.2, 0, 1);
  RandomStream f1 = data_stream(plan, 0.2, 1, 1);
  CHECK(f0.next() != f1.next());
}

TEST_CASE("failed fits are recorded, not dropped") {
  const DgpModel dgp{default_spec(test_q()), test_params(), 3};
  RandomStream s(8);
  const ResponseMatrix data = sample_dataset(dgp, 100, s);
  FitConfig one_step;
  one_step.max_iters = 1;
  const CellResult c = evaluate_cell(data, dgp.spec, one_step);
  CHECK(c.status == CellStatus::NotConverged);
  CHECK_FALSE(c.gimt.has_value());
  CHECK(to_string(c.status) == "not_converged");
}

TEST_CASE("estimates concentrate around the truth as n grows") {
  const DgpModel dgp{default_spec(test_q()), test_params(), 3};
  std::vector<double> median_err;
  for (int n : {536, 5000}) {
    std::vector<double> errs;
    for (int d = 0; d < 5; ++d) {
      RandomStream s = RandomStream::derive(31, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d)});
      const ResponseMatrix data = sample_dataset(dgp, n, s);
      const FitResult f = fit(data, dgp.spec);
      errs.push_back((f.beta_hat.flat() - dgp.beta_star.flat()).cwiseAbs().maxCoeff());
    }
    std::nth_element(errs.begin(), errs.begin() + 2, errs.end());
    median_err.push_back(errs[2]);
  }
  CHECK(median_err[1] < median_err[0]);
}
