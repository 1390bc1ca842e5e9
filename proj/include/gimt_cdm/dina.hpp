#pragma once

// DINA response model: item probabilities, the Bernoulli skill prior, and the
// per-examinee marginal negative log-likelihood c(x; beta) with its analytic
// gradient and Hessian. The marginal sums over all 2^K attribute patterns.

#include <cstdint>
#include <span>
#include <vector>

#include "gimt_cdm/types.hpp"

namespace gimt_cdm {

using Responses = std::span<const std::uint8_t>;

// 1 / (1 + exp(-phi)), evaluated without overflow for large |phi|.
double sigmoid(double phi);
// log(sigmoid(phi)), accurate in both tails.
double log_sigmoid(double phi);

// Conjunctive condensation rule: 1 iff every skill required by q_row is
// mastered. An all-zero q_row yields 1 (empty product).
int psi(const AttributePattern& alpha, Responses q_row);

// P(x_ij = 1 | alpha) = sigmoid(slope * psi - intercept).
double item_prob(const AttributePattern& alpha, double slope, double intercept, Responses q_row);

double attribute_prior_mass(const AttributePattern& alpha, const AttributePrior& prior);

// sum_j log P(x_ij | alpha, beta_j, q_j).
double conditional_loglik(Responses x, const AttributePattern& alpha, const ItemParams& beta, const QMatrix& q);

// c(x; beta) = -log sum_alpha P(x | alpha, beta) P(alpha).
double marginal_negloglik_per_obs(Responses x, const ItemParams& beta, const QMatrix& q,
                                  const AttributePrior& prior);
// g(x; beta) = grad of c with respect to the flattened beta.
Vector grad_per_obs(Responses x, const ItemParams& beta, const QMatrix& q, const AttributePrior& prior);
// Hessian of c, by the missing-information identity
//   hess c = E_w[hess c_alpha] - Cov_w(grad c_alpha)
// where w is the posterior over patterns and c_alpha = -log P(x | alpha, beta).
Matrix hessian_per_obs(Responses x, const ItemParams& beta, const QMatrix& q, const AttributePrior& prior);

// Pattern-level tables for one (Q, attribute prior) pair, reused across
// examinees and parameter values. Thread-safe for concurrent const use.
class DinaLikelihood {
public:
  DinaLikelihood(const QMatrix& q, const AttributePrior& prior);

  // Per-item probabilities and log-masses at one beta, for both psi values.
  struct ItemTable {
    std::vector<double> p_master, p_nonmaster;        // P(x=1 | psi=1), P(x=1 | psi=0)
    std::vector<double> q_master, q_nonmaster;        // complements, computed without subtraction
    std::vector<double> logp_master, logq_master;      // log P(x=1|psi=1), log P(x=0|psi=1)
    std::vector<double> logp_nonmaster, logq_nonmaster;
  };
  ItemTable tabulate(const ItemParams& beta) const;

  // Returns c(x; beta). Writes the gradient and Hessian when the pointers are
  // non-null (overwriting their contents).
  double evaluate(Responses x, const ItemTable& table, Vector* grad = nullptr, Matrix* hess = nullptr) const;

  // Posterior weights over patterns, in enumeration order.
  Vector posterior(Responses x, const ItemTable& table) const;

  int items() const { return items_; }
  int skills() const { return skills_; }
  int patterns() const { return patterns_; }
  int num_params() const { return 2 * items_; }
  std::uint8_t psi_at(int pattern, int item) const { return psi_[static_cast<std::size_t>(pattern) * items_ + item]; }
  double log_prior_mass(int pattern) const { return log_prior_[pattern]; }

private:
  // Fills log P(x, alpha) per pattern and returns the log-sum-exp.
  double log_joint(Responses x, const ItemTable& table, Vector& out) const;

  int items_;
  int skills_;
  int patterns_;
  std::vector<std::uint8_t> psi_;  // patterns x items
  std::vector<double> log_prior_;  // patterns
};

} // namespace gimt_cdm
