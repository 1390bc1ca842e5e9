#include "gimt_cdm/types.hpp"

#include <cmath>

namespace gimt_cdm {

BinaryMatrix::BinaryMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw DimensionError("matrix dimensions must be non-negative");
  }
  bits_.assign(static_cast<std::size_t>(rows) * cols, 0);
}

BinaryMatrix BinaryMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  if (rows.empty()) {
    return BinaryMatrix(0, 0);
  }
  const int cols = static_cast<int>(rows.front().size());
  BinaryMatrix m(static_cast<int>(rows.size()), cols);
  for (int r = 0; r < m.rows(); ++r) {
    if (static_cast<int>(rows[r].size()) != cols) {
      throw DimensionError("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                           " entries, expected " + std::to_string(cols));
    }
    for (int c = 0; c < cols; ++c) {
      const int v = rows[r][c];
      if (v != 0 && v != 1) {
        throw ParseError("entry (" + std::to_string(r + 1) + ", " + std::to_string(c + 1) +
                         ") is not 0 or 1");
      }
      m.set(r, c, v == 1);
    }
  }
  return m;
}

ResponseMatrix::ResponseMatrix(int examinees, int items) : BinaryMatrix(examinees, items) {
  if (examinees < 1 || items < 1) {
    throw DimensionError("response matrix needs at least one examinee and one item");
  }
}

ResponseMatrix::ResponseMatrix(BinaryMatrix m) : BinaryMatrix(std::move(m)) {
  if (rows() < 1 || cols() < 1) {
    throw DimensionError("response matrix needs at least one examinee and one item");
  }
}

QMatrix::QMatrix(int items, int skills) : BinaryMatrix(items, skills) {
  if (items < 1 || skills < 1 || skills > kMaxSkills) {
    throw DimensionError("Q-matrix needs J >= 1 and 1 <= K <= 16");
  }
}

QMatrix::QMatrix(BinaryMatrix m) : BinaryMatrix(std::move(m)) {
  if (rows() < 1 || cols() < 1 || cols() > kMaxSkills) {
    throw DimensionError("Q-matrix needs J >= 1 and 1 <= K <= 16, got " + std::to_string(rows()) + "x" +
                         std::to_string(cols()));
  }
}

bool QMatrix::has_empty_row() const {
  for (int j = 0; j < items(); ++j) {
    bool any = false;
    for (auto b : row(j)) {
      any = any || b;
    }
    if (!any) {
      return true;
    }
  }
  return false;
}

ItemParams::ItemParams(Vector flat) : values_(std::move(flat)) {
  if (values_.size() % 2 != 0) {
    throw DimensionError("item parameter vector must have even length");
  }
  if (!values_.allFinite()) {
    throw Error("item parameters must be finite");
  }
}

ItemParams ItemParams::uniform(int items, double slope, double intercept) {
  Vector v(2 * items);
  for (int j = 0; j < items; ++j) {
    v[slope_index(j)] = slope;
    v[intercept_index(j)] = intercept;
  }
  return ItemParams(std::move(v));
}

AttributePrior AttributePrior::from_mastery_probability(int skills, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("mastery probability must lie in (0, 1)");
  }
  return AttributePrior{Vector::Constant(skills, -std::log(p / (1.0 - p)))};
}

double AttributePrior::mastery_probability(int k) const {
  return 1.0 / (1.0 + std::exp(eta[k]));
}

void AttributePrior::validate() const {
  if (!eta.allFinite()) {
    throw Error("attribute prior eta must be finite");
  }
}

void GaussianPrior::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !mu.allFinite()) {
    throw Error("Gaussian prior needs finite mu and sigma2 > 0");
  }
}

AttributePattern::AttributePattern(std::uint32_t bits, int skills) : bits_(bits), skills_(skills) {
  if (skills < 1 || skills > QMatrix::kMaxSkills || bits >= (1u << skills)) {
    throw DimensionError("attribute pattern out of range for K = " + std::to_string(skills));
  }
}

AttributePattern AttributePattern::from_bits(std::span<const int> alpha) {
  std::uint32_t bits = 0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (alpha[k] != 0 && alpha[k] != 1) {
      throw Error("attribute entries must be 0 or 1");
    }
    bits |= static_cast<std::uint32_t>(alpha[k]) << k;
  }
  return AttributePattern(bits, static_cast<int>(alpha.size()));
}

void ModelSpec::validate() const {
  if (attribute_prior.skills() != q.skills()) {
    throw DimensionError("attribute prior has " + std::to_string(attribute_prior.skills()) +
                         " skills but the Q-matrix has " + std::to_string(q.skills()));
  }
  attribute_prior.validate();
  param_prior.validate();
}

ModelSpec default_spec(QMatrix q) {
  const int k = q.skills();
  return ModelSpec{std::move(q), AttributePrior::from_mastery_probability(k, 0.354), GaussianPrior{}};
}

} // namespace gimt_cdm
