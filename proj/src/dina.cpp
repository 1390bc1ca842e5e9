#include "gimt_cdm/dina.hpp"

#include <cmath>
#include <limits>

namespace gimt_cdm {

double sigmoid(double phi) {
  if (phi >= 0.0) {
    return 1.0 / (1.0 + std::exp(-phi));
  }
  const double e = std::exp(phi);
  return e / (1.0 + e);
}

double log_sigmoid(double phi) {
  if (phi >= 0.0) {
    return -std::log1p(std::exp(-phi));
  }
  return phi - std::log1p(std::exp(phi));
}

int psi(const AttributePattern& alpha, Responses q_row) {
  if (static_cast<int>(q_row.size()) != alpha.skills()) {
    throw DimensionError("psi: Q row has " + std::to_string(q_row.size()) + " skills, pattern has " +
                         std::to_string(alpha.skills()));
  }
  for (int k = 0; k < alpha.skills(); ++k) {
    if (q_row[k] && !alpha.mastered(k)) {
      return 0;
    }
  }
  return 1;
}

double item_prob(const AttributePattern& alpha, double slope, double intercept, Responses q_row) {
  return sigmoid(slope * psi(alpha, q_row) - intercept);
}

double attribute_prior_mass(const AttributePattern& alpha, const AttributePrior& prior) {
  if (prior.skills() != alpha.skills()) {
    throw DimensionError("attribute prior and pattern disagree on K");
  }
  double mass = 1.0;
  for (int k = 0; k < alpha.skills(); ++k) {
    // P(alpha_k = 1) = sigmoid(-eta_k); P(alpha_k = 0) = sigmoid(eta_k)
    mass *= sigmoid(alpha.mastered(k) ? -prior.eta[k] : prior.eta[k]);
  }
  return mass;
}

namespace {

void check_dims(Responses x, const ItemParams& beta, const QMatrix& q) {
  if (static_cast<int>(x.size()) != q.items() || beta.items() != q.items()) {
    throw DimensionError("responses (" + std::to_string(x.size()) + "), parameters (" +
                         std::to_string(beta.items()) + ") and Q-matrix (" + std::to_string(q.items()) +
                         ") disagree on the item count");
  }
}

} // namespace

double conditional_loglik(Responses x, const AttributePattern& alpha, const ItemParams& beta, const QMatrix& q) {
  check_dims(x, beta, q);
  double ll = 0.0;
  for (int j = 0; j < q.items(); ++j) {
    const double phi = beta.slope(j) * psi(alpha, q.row(j)) - beta.intercept(j);
    ll += x[j] ? log_sigmoid(phi) : log_sigmoid(-phi);
  }
  return ll;
}

double marginal_negloglik_per_obs(Responses x, const ItemParams& beta, const QMatrix& q,
                                  const AttributePrior& prior) {
  check_dims(x, beta, q);
  DinaLikelihood model(q, prior);
  return model.evaluate(x, model.tabulate(beta));
}

Vector grad_per_obs(Responses x, const ItemParams& beta, const QMatrix& q, const AttributePrior& prior) {
  check_dims(x, beta, q);
  DinaLikelihood model(q, prior);
  Vector g;
  model.evaluate(x, model.tabulate(beta), &g);
  return g;
}

Matrix hessian_per_obs(Responses x, const ItemParams& beta, const QMatrix& q, const AttributePrior& prior) {
  check_dims(x, beta, q);
  DinaLikelihood model(q, prior);
  Vector g;
  Matrix h;
  model.evaluate(x, model.tabulate(beta), &g, &h);
  return h;
}

// ---------------------------------------------------------------------------
// DinaLikelihood
// ---------------------------------------------------------------------------

DinaLikelihood::DinaLikelihood(const QMatrix& q, const AttributePrior& prior)
    : items_(q.items()), skills_(q.skills()), patterns_(1 << q.skills()) {
  if (prior.skills() != skills_) {
    throw DimensionError("attribute prior has " + std::to_string(prior.skills()) + " skills, Q-matrix has " +
                         std::to_string(skills_));
  }
  psi_.resize(static_cast<std::size_t>(patterns_) * items_);
  log_prior_.resize(patterns_);
  for (int a = 0; a < patterns_; ++a) {
    const AttributePattern alpha(static_cast<std::uint32_t>(a), skills_);
    double lp = 0.0;
    for (int k = 0; k < skills_; ++k) {
      lp += log_sigmoid(alpha.mastered(k) ? -prior.eta[k] : prior.eta[k]);
    }
    log_prior_[a] = lp;
    for (int j = 0; j < items_; ++j) {
      psi_[static_cast<std::size_t>(a) * items_ + j] = static_cast<std::uint8_t>(psi(alpha, q.row(j)));
    }
  }
}

DinaLikelihood::ItemTable DinaLikelihood::tabulate(const ItemParams& beta) const {
  if (beta.items() != items_) {
    throw DimensionError("parameter vector covers " + std::to_string(beta.items()) + " items, model has " +
                         std::to_string(items_));
  }
  ItemTable t;
  const auto n = static_cast<std::size_t>(items_);
  t.p_master.resize(n);
  t.p_nonmaster.resize(n);
  t.q_master.resize(n);
  t.q_nonmaster.resize(n);
  t.logp_master.resize(n);
  t.logq_master.resize(n);
  t.logp_nonmaster.resize(n);
  t.logq_nonmaster.resize(n);
  for (int j = 0; j < items_; ++j) {
    const double phi1 = beta.slope(j) - beta.intercept(j);
    const double phi0 = -beta.intercept(j);
    t.p_master[j] = sigmoid(phi1);
    t.p_nonmaster[j] = sigmoid(phi0);
    t.q_master[j] = sigmoid(-phi1);
    t.q_nonmaster[j] = sigmoid(-phi0);
    t.logp_master[j] = log_sigmoid(phi1);
    t.logq_master[j] = log_sigmoid(-phi1);
    t.logp_nonmaster[j] = log_sigmoid(phi0);
    t.logq_nonmaster[j] = log_sigmoid(-phi0);
  }
  return t;
}

double DinaLikelihood::log_joint(Responses x, const ItemTable& t, Vector& out) const {
  if (static_cast<int>(x.size()) != items_) {
    throw DimensionError("response vector has " + std::to_string(x.size()) + " items, model has " +
                         std::to_string(items_));
  }
  out.resize(patterns_);
  double max_lj = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < patterns_; ++a) {
    const std::uint8_t* ps = psi_.data() + static_cast<std::size_t>(a) * items_;
    double lj = log_prior_[a];
    for (int j = 0; j < items_; ++j) {
      if (ps[j]) {
        lj += x[j] ? t.logp_master[j] : t.logq_master[j];
      } else {
        lj += x[j] ? t.logp_nonmaster[j] : t.logq_nonmaster[j];
      }
    }
    out[a] = lj;
    max_lj = std::max(max_lj, lj);
  }
  double s = 0.0;
  for (int a = 0; a < patterns_; ++a) {
    s += std::exp(out[a] - max_lj);
  }
  return max_lj + std::log(s);
}

Vector DinaLikelihood::posterior(Responses x, const ItemTable& table) const {
  Vector lj;
  const double lse = log_joint(x, table, lj);
  return (lj.array() - lse).exp().matrix();
}

double DinaLikelihood::evaluate(Responses x, const ItemTable& t, Vector* grad, Matrix* hess) const {
  Vector w;
  const double lse = log_joint(x, t, w);
  if (grad == nullptr && hess == nullptr) {
    return -lse;
  }
  w = (w.array() - lse).exp().matrix();

  // Conditional scores grad c_alpha: for item j with residual r = x_j - p_j(alpha)
  // the (slope, intercept) entries are (-r * psi, r).
  const int q = num_params();
  Matrix scores = Matrix::Zero(patterns_, q);
  for (int a = 0; a < patterns_; ++a) {
    const std::uint8_t* ps = psi_.data() + static_cast<std::size_t>(a) * items_;
    for (int j = 0; j < items_; ++j) {
      const double r = static_cast<double>(x[j]) - (ps[j] ? t.p_master[j] : t.p_nonmaster[j]);
      if (ps[j]) {
        scores(a, 2 * j) = -r;
      }
      scores(a, 2 * j + 1) = r;
    }
  }
  Vector g = scores.transpose() * w;

  if (hess != nullptr) {
    Matrix& h = *hess;
    h.resize(q, q);
    // -Cov_w(scores)
    h.noalias() = -(scores.transpose() * (w.asDiagonal() * scores));
    h.noalias() += g * g.transpose();
    // + E_w[conditional Hessian]; per item p(1-p) u u^T with u = (psi, -1)
    for (int j = 0; j < items_; ++j) {
      double mass_master = 0.0;
      for (int a = 0; a < patterns_; ++a) {
        if (psi_at(a, j)) {
          mass_master += w[a];
        }
      }
      const double v1 = t.p_master[j] * t.q_master[j];
      const double v0 = t.p_nonmaster[j] * t.q_nonmaster[j];
      const int s = 2 * j;
      const int c = 2 * j + 1;
      h(s, s) += mass_master * v1;
      h(s, c) -= mass_master * v1;
      h(c, s) -= mass_master * v1;
      h(c, c) += mass_master * v1 + (1.0 - mass_master) * v0;
    }
    // the product above is symmetric only up to rounding
    h = (0.5 * (h + h.transpose())).eval();
  }
  if (grad != nullptr) {
    *grad = std::move(g);
  }
  return -lse;
}

} // namespace gimt_cdm
