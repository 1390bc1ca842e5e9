#pragma once

// ROC analysis of GIMT scores: misspecified cells are the positive class,
// correctly specified (level 0) cells the negative class.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gimt_cdm/sim.hpp"

namespace gimt_cdm {

struct RocCurve {
  // Points run from (0, 0) to (1, 1). thresholds[k] is the cut "score >= t"
  // giving point k; the first threshold is +inf.
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;
  std::vector<std::int64_t> fp_counts;
  std::vector<std::int64_t> tp_counts;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;

  std::size_t size() const { return fpr.size(); }
};

// Threshold sweep over the distinct scores in descending order; tied scores
// form a single (diagonal) step. Throws EvaluationError on an empty class.
RocCurve roc(std::span<const double> scores_pos, std::span<const double> scores_neg);

// Trapezoidal area, computed from integer counts. Equals the Mann-Whitney U
// statistic over |pos| * |neg| with ties counted 1/2.
double auroc(const RocCurve& curve);

enum class ScoreKind { Wald, SHat, AbsSHat };
std::string to_string(ScoreKind kind);
ScoreKind parse_score_kind(const std::string& name);

double cell_score(const CellResult& cell, ScoreKind kind);

struct ReplicationRoc {
  double level = 0.0;
  int replication = 0;
  RocCurve curve;
  double auroc = 0.0;
};

struct AurocSummary {
  double level = 0.0;
  std::vector<double> per_replication_auroc;
  double mean = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  int scored_cells = 0;
  int excluded_cells = 0;  // failed fits or tests at this level
  std::string comparison;  // which negatives the positives were ranked against
};

// Per-replication ROC curves. For level > 0 each replication's scores are
// ranked against all level-0 scores. Level 0 is compared with itself:
// replication r against the pooled other level-0 replications, or, with a
// single replication, the first half of its datasets against the second.
std::vector<ReplicationRoc> replication_curves(std::span<const CellResult> cells, ScoreKind kind = ScoreKind::Wald);

// Mean AUROC per level with a normal-approximation interval
// mean +- 1.96 sd / sqrt(R) (sample sd over replications), clamped to [0, 1].
// Throws EvaluationError when no usable level-0 cells exist.
std::vector<AurocSummary> summarize_levels(std::span<const CellResult> cells, ScoreKind kind = ScoreKind::Wald);

} // namespace gimt_cdm
