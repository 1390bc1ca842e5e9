#pragma once

// Parametric-bootstrap experiment engine: sample response data from a fitted
// DINA model, perturb the Q-matrix at graded flip probabilities, then fit and
// test every (level, replication, dataset) cell.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gimt_cdm/estimator.hpp"
#include "gimt_cdm/gimt.hpp"
#include "gimt_cdm/rng.hpp"
#include "gimt_cdm/types.hpp"

namespace gimt_cdm {

struct DgpModel {
  ModelSpec spec;
  ItemParams beta_star;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PerturbationPlan {
  std::vector<double> flip_levels{0.0, 0.01, 0.05, 0.10, 0.15, 0.20};
  int replications_per_level = 5;
  int datasets_per_replication = 50;
  int n_per_dataset = 536;
  std::uint64_t seed = 1;
  // When set, dataset d of every replication within a level is the same draw.
  bool share_datasets_within_level = false;
  int max_perturbation_retries = 100;

  void validate() const;
  std::size_t cell_count() const;
};

enum class CellLabel { Correct, Misspecified };

enum class CellStatus { Ok, NotConverged, DegenerateFit, MatrixFailure, VarianceFailure, OptimizationFailure,
                        PerturbationFailure, Failed };

std::string to_string(CellLabel label);
std::string to_string(CellStatus status);

struct CellResult {
  double level = 0.0;
  int replication = 0;
  int dataset = 0;
  CellLabel label = CellLabel::Correct;
  CellStatus status = CellStatus::Ok;
  std::string detail;
  std::optional<GimtResult> gimt;  // present iff status == Ok
  bool converged = false;
  double grad_norm = 0.0;
  double min_eig = 0.0;
  int iterations = 0;
  int q_flips = 0;           // Hamming distance of the replication's Q from the original
  int q_rejected_draws = 0;  // perturbation draws rejected for an all-zero row

  bool ok() const { return status == CellStatus::Ok; }
};

// Draws alpha_k ~ Bernoulli(sigmoid(-eta_k)) per skill, then each response
// from its item probability; skills first, then items, examinee by examinee.
ResponseMatrix sample_dataset(const DgpModel& dgp, int n, RandomStream& stream);

struct PerturbedQ {
  QMatrix q;
  int flips = 0;
  int rejected_draws = 0;
};

// Flips each entry independently with probability flip_prob. Draws with an
// all-zero row are rejected and redrawn; throws PerturbationError once
// max_retries rejections have occurred. flip_prob == 0 returns q unchanged.
PerturbedQ perturb_q(const QMatrix& q, double flip_prob, RandomStream& stream, int max_retries = 100);

// Integer key of a flip level used in substream derivation (parts per million).
std::uint64_t level_key(double level);

// Substreams: Q for (level, r) from (seed, kQStream, level_key, r); data for
// (level, r, d) from (seed, kDataStream, level_key, r, d), or with r omitted
// when datasets are shared within a level.
inline constexpr std::uint64_t kQStream = 0x51;
inline constexpr std::uint64_t kDataStream = 0xDA;
RandomStream q_stream(const PerturbationPlan& plan, double level, int replication);
RandomStream data_stream(const PerturbationPlan& plan, double level, int replication, int dataset);

// Fits and tests one dataset against one spec; failures become the status.
CellResult evaluate_cell(const ResponseMatrix& data, const ModelSpec& spec, const FitConfig& fit_cfg,
                         const GimtOptions& gimt_options = {});

// One result per (level, replication, dataset) in plan order. Deterministic
// for any worker count.
std::vector<CellResult> run_grid(const DgpModel& dgp, const PerturbationPlan& plan, const FitConfig& fit_cfg,
                                 int workers = 1, const GimtOptions& gimt_options = {});

} // namespace gimt_cdm
