#include "gimt_cdm/sim.hpp"

#include <cmath>

#include "gimt_cdm/dina.hpp"
#include "gimt_cdm/parallel.hpp"

namespace gimt_cdm {

void DgpModel::validate() const {
  spec.validate();
  if (beta_star.items() != spec.items()) {
    throw DimensionError("DGP parameters cover " + std::to_string(beta_star.items()) + " items, Q-matrix has " +
                         std::to_string(spec.items()));
  }
}

void PerturbationPlan::validate() const {
  if (flip_levels.empty()) {
    throw Error("plan needs at least one flip level");
  }
  for (double l : flip_levels) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw Error("flip levels must lie in [0, 1]");
    }
  }
  if (replications_per_level < 1 || datasets_per_replication < 1 || n_per_dataset < 1 ||
      max_perturbation_retries < 0) {
    throw Error("plan counts must be >= 1");
  }
}

std::size_t PerturbationPlan::cell_count() const {
  return flip_levels.size() * static_cast<std::size_t>(replications_per_level) *
         static_cast<std::size_t>(datasets_per_replication);
}

std::string to_string(CellLabel label) {
  return label == CellLabel::Correct ? "correct" : "misspecified";
}

std::string to_string(CellStatus status) {
  switch (status) {
  case CellStatus::Ok: return "ok";
  case CellStatus::NotConverged: return "not_converged";
  case CellStatus::DegenerateFit: return "degenerate_fit";
  case CellStatus::MatrixFailure: return "matrix_failure";
  case CellStatus::VarianceFailure: return "variance_failure";
  case CellStatus::OptimizationFailure: return "optimization_failure";
  case CellStatus::PerturbationFailure: return "perturbation_failure";
  case CellStatus::Failed: return "failed";
  }
  return "unknown";
}

ResponseMatrix sample_dataset(const DgpModel& dgp, int n, RandomStream& stream) {
  dgp.validate();
  const QMatrix& q = dgp.spec.q;
  const int items = q.items();
  const int skills = q.skills();
  std::vector<double> mastery(skills);
  for (int k = 0; k < skills; ++k) {
    mastery[k] = dgp.spec.attribute_prior.mastery_probability(k);
  }
  ResponseMatrix x(n, items);
  for (int i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < skills; ++k) {
      if (stream.bernoulli(mastery[k])) {
        bits |= 1u << k;
      }
    }
    const AttributePattern alpha(bits, skills);
    for (int j = 0; j < items; ++j) {
      const double p = item_prob(alpha, dgp.beta_star.slope(j), dgp.beta_star.intercept(j), q.row(j));
      x.set(i, j, stream.bernoulli(p));
    }
  }
  return x;
}

PerturbedQ perturb_q(const QMatrix& q, double flip_prob, RandomStream& stream, int max_retries) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) {
    throw PerturbationError("flip probability must lie in [0, 1]");
  }
  if (flip_prob == 0.0) {
    return PerturbedQ{q, 0, 0};
  }
  for (int rejected = 0; rejected <= max_retries; ++rejected) {
    QMatrix out = q;
    int flips = 0;
    for (int j = 0; j < q.items(); ++j) {
      for (int k = 0; k < q.skills(); ++k) {
        if (stream.bernoulli(flip_prob)) {
          out.set(j, k, !q(j, k));
          ++flips;
        }
      }
    }
    if (!out.has_empty_row()) {
      return PerturbedQ{std::move(out), flips, rejected};
    }
  }
  throw PerturbationError("no perturbation without an all-zero row after " + std::to_string(max_retries) +
                          " retries");
}

std::uint64_t level_key(double level) {
  return static_cast<std::uint64_t>(std::llround(level * 1e6));
}

RandomStream q_stream(const PerturbationPlan& plan, double level, int replication) {
  return RandomStream::derive(plan.seed, {kQStream, level_key(level), static_cast<std::uint64_t>(replication)});
}

RandomStream data_stream(const PerturbationPlan& plan, double level, int replication, int dataset) {
  if (plan.share_datasets_within_level) {
    return RandomStream::derive(plan.seed, {kDataStream, level_key(level), static_cast<std::uint64_t>(dataset)});
  }
  return RandomStream::derive(plan.seed, {kDataStream, level_key(level), static_cast<std::uint64_t>(replication),
                                          static_cast<std::uint64_t>(dataset)});
}

CellResult evaluate_cell(const ResponseMatrix& data, const ModelSpec& spec, const FitConfig& fit_cfg,
                         const GimtOptions& gimt_options) {
  CellResult cell;
  try {
    const FitResult fitted = fit(data, spec, fit_cfg);
    cell.converged = fitted.converged;
    cell.grad_norm = fitted.grad_norm;
    cell.min_eig = fitted.hessian_min_eig;
    cell.iterations = fitted.iterations;
    if (!fitted.converged) {
      cell.status = CellStatus::NotConverged;
      cell.detail = fitted.message;
      return cell;
    }
    cell.gimt = gimt_det_test(data, spec, fitted.beta_hat, gimt_options);
    cell.status = CellStatus::Ok;
  } catch (const DegenerateFitError& e) {
    cell.status = CellStatus::DegenerateFit;
    cell.detail = e.what();
  } catch (const MatrixError& e) {
    cell.status = CellStatus::MatrixFailure;
    cell.detail = e.what();
  } catch (const VarianceError& e) {
    cell.status = CellStatus::VarianceFailure;
    cell.detail = e.what();
  } catch (const OptimizationError& e) {
    cell.status = CellStatus::OptimizationFailure;
    cell.detail = e.what();
  } catch (const std::exception& e) {
    cell.status = CellStatus::Failed;
    cell.detail = e.what();
  }
  return cell;
}

std::vector<CellResult> run_grid(const DgpModel& dgp, const PerturbationPlan& plan, const FitConfig& fit_cfg,
                                 int workers, const GimtOptions& gimt_options) {
  dgp.validate();
  plan.validate();
  fit_cfg.validate();

  const int reps = plan.replications_per_level;
  const int datasets = plan.datasets_per_replication;

  // One perturbed Q per (level, replication), shared by its datasets.
  struct Replication {
    std::optional<ModelSpec> spec;
    int flips = 0;
    int rejected = 0;
    std::string failure;
  };
  std::vector<Replication> replications;
  for (double level : plan.flip_levels) {
    for (int r = 0; r < reps; ++r) {
      Replication rep;
      try {
        RandomStream stream = q_stream(plan, level, r);
        PerturbedQ perturbed = perturb_q(dgp.spec.q, level, stream, plan.max_perturbation_retries);
        rep.flips = perturbed.flips;
        rep.rejected = perturbed.rejected_draws;
        rep.spec = ModelSpec{std::move(perturbed.q), dgp.spec.attribute_prior, dgp.spec.param_prior};
      } catch (const PerturbationError& e) {
        rep.failure = e.what();
      }
      replications.push_back(std::move(rep));
    }
  }

  std::vector<CellResult> cells(plan.cell_count());
  parallel_for(cells.size(), workers, [&](std::size_t idx) {
    const auto level_idx = idx / static_cast<std::size_t>(reps * datasets);
    const int r = static_cast<int>((idx / datasets) % reps);
    const int d = static_cast<int>(idx % datasets);
    const double level = plan.flip_levels[level_idx];
    const Replication& rep = replications[level_idx * reps + r];

    CellResult cell;
    if (rep.spec) {
      RandomStream stream = data_stream(plan, level, r, d);
      const ResponseMatrix data = sample_dataset(dgp, plan.n_per_dataset, stream);
      cell = evaluate_cell(data, *rep.spec, fit_cfg, gimt_options);
    } else {
      cell.status = CellStatus::PerturbationFailure;
      cell.detail = rep.failure;
    }
    cell.level = level;
    cell.replication = r;
    cell.dataset = d;
    cell.label = level == 0.0 ? CellLabel::Correct : CellLabel::Misspecified;
    cell.q_flips = rep.flips;
    cell.q_rejected_draws = rep.rejected;
    cells[idx] = std::move(cell);
  });
  return cells;
}

} // namespace gimt_cdm
