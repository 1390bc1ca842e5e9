#include "gimt_cdm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace gimt_cdm {

RocCurve roc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) {
    throw EvaluationError("ROC needs at least one positive and one negative score");
  }
  std::vector<double> pos(scores_pos.begin(), scores_pos.end());
  std::vector<double> neg(scores_neg.begin(), scores_neg.end());
  for (double s : pos) {
    if (std::isnan(s)) throw EvaluationError("ROC scores must not be NaN");
  }
  for (double s : neg) {
    if (std::isnan(s)) throw EvaluationError("ROC scores must not be NaN");
  }
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());

  RocCurve c;
  c.positives = static_cast<std::int64_t>(pos.size());
  c.negatives = static_cast<std::int64_t>(neg.size());
  const double np = static_cast<double>(c.positives);
  const double nn = static_cast<double>(c.negatives);
  auto push = [&](double threshold, std::int64_t tp, std::int64_t fp) {
    c.thresholds.push_back(threshold);
    c.tp_counts.push_back(tp);
    c.fp_counts.push_back(fp);
    c.tpr.push_back(static_cast<double>(tp) / np);
    c.fpr.push_back(static_cast<double>(fp) / nn);
  };
  push(std::numeric_limits<double>::infinity(), 0, 0);

  std::size_t ip = 0;
  std::size_t in = 0;
  while (ip < pos.size() || in < neg.size()) {
    double t = -std::numeric_limits<double>::infinity();
    if (ip < pos.size()) t = std::max(t, pos[ip]);
    if (in < neg.size()) t = std::max(t, neg[in]);
    while (ip < pos.size() && pos[ip] == t) ++ip;
    while (in < neg.size() && neg[in] == t) ++in;
    push(t, static_cast<std::int64_t>(ip), static_cast<std::int64_t>(in));
  }
  return c;
}

double auroc(const RocCurve& curve) {
  if (curve.size() < 2 || curve.positives < 1 || curve.negatives < 1) {
    throw EvaluationError("AUROC needs a curve with both classes");
  }
  // twice the area in units of (1 / positives) x (1 / negatives)
  std::int64_t twice_area = 0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    twice_area += (curve.fp_counts[k] - curve.fp_counts[k - 1]) * (curve.tp_counts[k] + curve.tp_counts[k - 1]);
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(curve.positives) *
                                            static_cast<double>(curve.negatives));
}

std::string to_string(ScoreKind kind) {
  switch (kind) {
  case ScoreKind::Wald: return "wald";
  case ScoreKind::SHat: return "s_hat";
  case ScoreKind::AbsSHat: return "abs_s_hat";
  }
  return "wald";
}

ScoreKind parse_score_kind(const std::string& name) {
  if (name == "wald") return ScoreKind::Wald;
  if (name == "s_hat") return ScoreKind::SHat;
  if (name == "abs_s_hat") return ScoreKind::AbsSHat;
  throw ParseError("unknown score '" + name + "' (expected wald, s_hat or abs_s_hat)");
}

double cell_score(const CellResult& cell, ScoreKind kind) {
  if (!cell.gimt) {
    throw EvaluationError("cell has no test result");
  }
  switch (kind) {
  case ScoreKind::Wald: return cell.gimt->wald;
  case ScoreKind::SHat: return cell.gimt->s_hat;
  case ScoreKind::AbsSHat: return std::abs(cell.gimt->s_hat);
  }
  return cell.gimt->wald;
}

namespace {

// Scores of usable cells keyed by level then replication, in dataset order.
using ScoreTable = std::map<double, std::map<int, std::vector<double>>>;

ScoreTable collect_scores(std::span<const CellResult> cells, ScoreKind kind, std::map<double, int>& excluded) {
  ScoreTable table;
  for (const auto& cell : cells) {
    auto& by_rep = table[cell.level];
    auto& scores = by_rep[cell.replication];
    if (cell.ok()) {
      scores.push_back(cell_score(cell, kind));
    } else {
      ++excluded[cell.level];
    }
  }
  return table;
}

std::vector<double> pooled(const std::map<int, std::vector<double>>& by_rep, int skip = -1) {
  std::vector<double> out;
  for (const auto& [r, scores] : by_rep) {
    if (r != skip) out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::vector<ReplicationRoc> curves_from(const ScoreTable& table) {
  const auto zero = table.find(0.0);
  if (zero == table.end() || pooled(zero->second).empty()) {
    throw EvaluationError("no usable level-0 (correctly specified) cells to compare against");
  }
  const auto& null_reps = zero->second;
  std::vector<ReplicationRoc> out;

  // level 0 against itself
  int nonempty_null_reps = 0;
  for (const auto& [r, scores] : null_reps) {
    nonempty_null_reps += scores.empty() ? 0 : 1;
  }
  if (nonempty_null_reps >= 2) {
    for (const auto& [r, scores] : null_reps) {
      const auto others = pooled(null_reps, r);
      if (scores.empty() || others.empty()) continue;
      ReplicationRoc rr{0.0, r, roc(scores, others), 0.0};
      rr.auroc = auroc(rr.curve);
      out.push_back(std::move(rr));
    }
  } else {
    const auto all = pooled(null_reps);
    const auto half = static_cast<std::ptrdiff_t>(all.size() / 2);
    if (half >= 1) {
      const std::vector<double> first(all.begin(), all.begin() + half);
      const std::vector<double> second(all.begin() + half, all.end());
      ReplicationRoc rr{0.0, null_reps.begin()->first, roc(first, second), 0.0};
      rr.auroc = auroc(rr.curve);
      out.push_back(std::move(rr));
    }
  }

  const auto negatives = pooled(null_reps);
  for (const auto& [level, by_rep] : table) {
    if (level == 0.0) continue;
    for (const auto& [r, scores] : by_rep) {
      if (scores.empty()) continue;
      ReplicationRoc rr{level, r, roc(scores, negatives), 0.0};
      rr.auroc = auroc(rr.curve);
      out.push_back(std::move(rr));
    }
  }
  return out;
}

} // namespace

std::vector<ReplicationRoc> replication_curves(std::span<const CellResult> cells, ScoreKind kind) {
  std::map<double, int> excluded;
  return curves_from(collect_scores(cells, kind, excluded));
}

std::vector<AurocSummary> summarize_levels(std::span<const CellResult> cells, ScoreKind kind) {
  std::map<double, int> excluded;
  const ScoreTable table = collect_scores(cells, kind, excluded);
  const auto curves = curves_from(table);

  std::vector<AurocSummary> out;
  for (const auto& [level, by_rep] : table) {
    AurocSummary s;
    s.level = level;
    s.excluded_cells = excluded.count(level) ? excluded.at(level) : 0;
    for (const auto& [r, scores] : by_rep) {
      s.scored_cells += static_cast<int>(scores.size());
    }
    for (const auto& c : curves) {
      if (c.level == level) s.per_replication_auroc.push_back(c.auroc);
    }
    if (level == 0.0) {
      const bool split = s.per_replication_auroc.size() == 1 && by_rep.size() == 1;
      s.comparison = split ? "level0_first_half_vs_second_half" : "level0_replication_vs_other_level0_replications";
    } else {
      s.comparison = "replication_vs_pooled_level0";
    }
    const auto r = static_cast<double>(s.per_replication_auroc.size());
    if (r > 0) {
      double sum = 0.0;
      for (double a : s.per_replication_auroc) sum += a;
      s.mean = sum / r;
      double ss = 0.0;
      for (double a : s.per_replication_auroc) ss += (a - s.mean) * (a - s.mean);
      const double sd = r > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
      const double half_width = 1.96 * sd / std::sqrt(r);
      s.ci_lower = std::clamp(s.mean - half_width, 0.0, 1.0);
      s.ci_upper = std::clamp(s.mean + half_width, 0.0, 1.0);
    } else {
      s.mean = s.ci_lower = s.ci_upper = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace gimt_cdm
