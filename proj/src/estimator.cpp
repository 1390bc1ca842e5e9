#include "gimt_cdm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gimt_cdm/rng.hpp"

namespace gimt_cdm {

// ---------------------------------------------------------------------------
// MapRisk
// ---------------------------------------------------------------------------

MapRisk::MapRisk(const ResponseMatrix& data, const ModelSpec& spec)
    : data_(data), spec_(spec), likelihood_(spec.q, spec.attribute_prior) {
  spec.validate();
  if (data.items() != spec.items()) {
    throw DimensionError("responses have " + std::to_string(data.items()) + " items but the Q-matrix has " +
                         std::to_string(spec.items()) + " rows");
  }
}

void MapRisk::check(const Vector& beta) const {
  if (beta.size() != num_params()) {
    throw DimensionError("parameter vector has length " + std::to_string(beta.size()) + ", expected " +
                         std::to_string(num_params()));
  }
}

double MapRisk::log_param_prior(const Vector& beta) const {
  check(beta);
  const auto& prior = spec_.param_prior;
  double lp = 0.0;
  for (int j = 0; j < spec_.items(); ++j) {
    const double ds = beta[2 * j] - prior.mu[0];
    const double di = beta[2 * j + 1] - prior.mu[1];
    lp += -std::log(2.0 * std::numbers::pi * prior.sigma2) - (ds * ds + di * di) / (2.0 * prior.sigma2);
  }
  return lp;
}

double MapRisk::value(const Vector& beta) const {
  const auto table = likelihood_.tabulate(ItemParams(beta));
  double sum = 0.0;
  for (int i = 0; i < examinees(); ++i) {
    sum += likelihood_.evaluate(data_.row(i), table);
  }
  const double n = examinees();
  return (sum - log_param_prior(beta)) / n;
}

double MapRisk::value_and_grad(const Vector& beta, Vector& grad) const {
  const auto table = likelihood_.tabulate(ItemParams(beta));
  const double n = examinees();
  double sum = 0.0;
  grad = Vector::Zero(num_params());
  Vector gi;
  for (int i = 0; i < examinees(); ++i) {
    sum += likelihood_.evaluate(data_.row(i), table, &gi);
    grad += gi;
  }
  const auto& prior = spec_.param_prior;
  for (int j = 0; j < spec_.items(); ++j) {
    grad[2 * j] += (beta[2 * j] - prior.mu[0]) / prior.sigma2;
    grad[2 * j + 1] += (beta[2 * j + 1] - prior.mu[1]) / prior.sigma2;
  }
  grad /= n;
  return (sum - log_param_prior(beta)) / n;
}

Matrix MapRisk::hessian(const Vector& beta) const {
  const auto table = likelihood_.tabulate(ItemParams(beta));
  const int q = num_params();
  Matrix h = Matrix::Zero(q, q);
  Vector gi;
  Matrix hi;
  for (int i = 0; i < examinees(); ++i) {
    likelihood_.evaluate(data_.row(i), table, &gi, &hi);
    h += hi;
  }
  h.diagonal().array() += 1.0 / spec_.param_prior.sigma2;
  h /= static_cast<double>(examinees());
  return h;
}

double map_risk(const ItemParams& beta, const ResponseMatrix& data, const ModelSpec& spec) {
  return MapRisk(data, spec).value(beta.flat());
}

Vector map_risk_grad(const ItemParams& beta, const ResponseMatrix& data, const ModelSpec& spec) {
  Vector g;
  MapRisk(data, spec).value_and_grad(beta.flat(), g);
  return g;
}

Matrix map_risk_hessian(const ItemParams& beta, const ResponseMatrix& data, const ModelSpec& spec) {
  return MapRisk(data, spec).hessian(beta.flat());
}

// ---------------------------------------------------------------------------
// BFGS with strong-Wolfe line search
// ---------------------------------------------------------------------------

void FitConfig::validate() const {
  if (max_iters < 1 || !(grad_tol > 0.0) || !(step_tol > 0.0) || random_restarts < 0) {
    throw Error("fit config needs max_iters >= 1, positive tolerances and restarts >= 0");
  }
  if (init == Init::Supplied && !supplied_init) {
    throw Error("fit config requests a supplied initial vector but none was given");
  }
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kMaxLineSearchEvals = 40;

struct Point {
  double alpha;
  double f;
  double slope;  // directional derivative
  Vector x;
  Vector g;
};

class LineSearch {
public:
  LineSearch(const MapRisk& risk, const Vector& x, double f0, const Vector& g0, const Vector& dir)
      : risk_(risk), x0_(x), dir_(dir), f0_(f0), slope0_(g0.dot(dir)) {}

  // Returns the accepted point, or nullopt if no strong-Wolfe point was
  // found. A point with sufficient decrease is still returned in that case.
  std::optional<Point> run(double alpha_init) {
    Point prev{0.0, f0_, slope0_, x0_, {}};
    double alpha = alpha_init;
    for (int i = 0; i < kMaxLineSearchEvals; ++i) {
      Point cur = eval(alpha);
      if (cur.f > f0_ + kArmijo * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur);
      }
      if (std::abs(cur.slope) <= -kCurvature * slope0_) {
        return cur;
      }
      if (cur.slope >= 0.0) {
        return zoom(cur, prev);
      }
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return best_;
  }

private:
  Point eval(double alpha) {
    Point p;
    p.alpha = alpha;
    p.x = x0_ + alpha * dir_;
    p.f = risk_.value_and_grad(p.x, p.g);
    if (!std::isfinite(p.f) || !p.g.allFinite()) {
      throw OptimizationError("non-finite risk during line search", x0_);
    }
    p.slope = p.g.dot(dir_);
    if (alpha > 0.0 && p.f <= f0_ + kArmijo * alpha * slope0_ && (!best_ || p.f < best_->f)) {
      best_ = p;
    }
    return p;
  }

  static double cubic_min(const Point& a, const Point& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (!(disc >= 0.0)) {
      return 0.5 * (a.alpha + b.alpha);
    }
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom == 0.0) {
      return 0.5 * (a.alpha + b.alpha);
    }
    return b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
  }

  std::optional<Point> zoom(Point lo, Point hi) {
    for (int i = 0; i < kMaxLineSearchEvals; ++i) {
      const double left = std::min(lo.alpha, hi.alpha);
      const double right = std::max(lo.alpha, hi.alpha);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) {
        break;
      }
      double alpha = cubic_min(lo, hi);
      // keep the trial away from the bracket ends
      alpha = std::clamp(alpha, left + 0.1 * width, right - 0.1 * width);
      Point cur = eval(alpha);
      if (cur.f > f0_ + kArmijo * alpha * slope0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -kCurvature * slope0_) {
          return cur;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) {
          hi = lo;
        }
        lo = std::move(cur);
      }
    }
    return best_;
  }

  const MapRisk& risk_;
  const Vector& x0_;
  const Vector& dir_;
  double f0_;
  double slope0_;
  std::optional<Point> best_;
};

FitResult run_bfgs(const MapRisk& risk, Vector x, const FitConfig& cfg) {
  FitResult out;
  const int q = risk.num_params();
  Vector g;
  double f = risk.value_and_grad(x, g);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw OptimizationError("non-finite risk at the initial point", x);
  }
  out.risk_trace.push_back(f);

  Matrix h_inv = Matrix::Identity(q, q);
  bool scaled = false;
  out.message = "iteration limit reached";
  int iter = 0;
  while (iter < cfg.max_iters) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      out.message = "gradient tolerance reached";
      break;
    }
    Vector dir = -h_inv * g;
    if (g.dot(dir) >= 0.0) {
      h_inv.setIdentity();
      scaled = false;
      dir = -g;
    }
    const double alpha0 = scaled ? 1.0 : std::min(1.0, 1.0 / g.norm());
    std::optional<Point> step = LineSearch(risk, x, f, g, dir).run(alpha0);
    if (!step) {
      if (!scaled) {
        out.message = "line search failed";
        break;
      }
      // retry once from steepest descent
      h_inv.setIdentity();
      scaled = false;
      continue;
    }
    const Vector s = step->x - x;
    const Vector y = step->g - g;
    x = std::move(step->x);
    g = std::move(step->g);
    f = step->f;
    ++iter;
    out.risk_trace.push_back(f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h_inv = Matrix::Identity(q, q) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector hy = h_inv * y;
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    if (s.lpNorm<Eigen::Infinity>() < cfg.step_tol) {
      out.message = "step tolerance reached";
      break;
    }
  }

  out.beta_hat = ItemParams(x);
  out.risk = f;
  out.grad_norm = g.lpNorm<Eigen::Infinity>();
  out.iterations = iter;

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(risk.hessian(x), Eigen::EigenvaluesOnly);
  out.hessian_min_eig = eig.eigenvalues().minCoeff();
  const double max_eig = eig.eigenvalues().maxCoeff();
  out.hessian_condition = out.hessian_min_eig > 0.0 ? max_eig / out.hessian_min_eig
                                                    : std::numeric_limits<double>::infinity();
  out.converged = out.grad_norm <= cfg.grad_tol && out.hessian_min_eig > 0.0;
  if (out.grad_norm <= cfg.grad_tol && !(out.hessian_min_eig > 0.0)) {
    out.message = "critical point is not a strict local minimizer";
  }
  return out;
}

} // namespace

FitResult fit(const ResponseMatrix& data, const ModelSpec& spec, const FitConfig& config) {
  config.validate();
  const MapRisk risk(data, spec);
  const int items = spec.items();
  const ItemParams prior_mean = ItemParams::uniform(items, spec.param_prior.mu[0], spec.param_prior.mu[1]);

  Vector start = prior_mean.flat();
  if (config.init == FitConfig::Init::Supplied) {
    if (config.supplied_init->items() != items) {
      throw DimensionError("initial parameter vector covers " + std::to_string(config.supplied_init->items()) +
                           " items, expected " + std::to_string(items));
    }
    start = config.supplied_init->flat();
  }
  FitResult best = run_bfgs(risk, start, config);

  for (int r = 1; r <= config.random_restarts; ++r) {
    RandomStream stream = RandomStream::derive(config.seed, {static_cast<std::uint64_t>(r)});
    Vector jittered = prior_mean.flat();
    for (int p = 0; p < jittered.size(); ++p) {
      jittered[p] += 0.5 * stream.normal();
    }
    FitResult candidate = run_bfgs(risk, jittered, config);
    const bool better = (candidate.converged && !best.converged) ||
                        (candidate.converged == best.converged && candidate.risk < best.risk);
    if (better) {
      best = std::move(candidate);
    }
  }
  return best;
}

} // namespace gimt_cdm
