#pragma once

// Core data types shared by every module: response and Q matrices, the
// flattened item-parameter vector, the two priors and attribute patterns.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gimt_cdm/errors.hpp"

namespace gimt_cdm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Row-major matrix of 0/1 entries. Base for ResponseMatrix and QMatrix.
class BinaryMatrix {
public:
  BinaryMatrix() = default;
  BinaryMatrix(int rows, int cols);
  // Throws ParseError on non-binary entries and DimensionError on ragged rows.
  static BinaryMatrix from_rows(const std::vector<std::vector<int>>& rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  std::uint8_t operator()(int r, int c) const { return bits_[index(r, c)]; }
  void set(int r, int c, bool value) { bits_[index(r, c)] = value ? 1 : 0; }
  std::span<const std::uint8_t> row(int r) const {
    return {bits_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// n x J examinee-by-item responses.
class ResponseMatrix : public BinaryMatrix {
public:
  ResponseMatrix() = default;
  ResponseMatrix(int examinees, int items);
  explicit ResponseMatrix(BinaryMatrix m);

  int examinees() const { return rows(); }
  int items() const { return cols(); }
};

// J x K skill-requirement matrix. K is capped at kMaxSkills because the
// likelihood enumerates all 2^K attribute patterns.
class QMatrix : public BinaryMatrix {
public:
  static constexpr int kMaxSkills = 16;

  QMatrix() = default;
  QMatrix(int items, int skills);
  explicit QMatrix(BinaryMatrix m);

  int items() const { return rows(); }
  int skills() const { return cols(); }
  bool has_empty_row() const;
};

// Item parameters flattened as (slope_1, intercept_1, slope_2, intercept_2, ...)
// so that parameter index 2j is item j's slope and 2j+1 its intercept.
class ItemParams {
public:
  ItemParams() = default;
  explicit ItemParams(Vector flat);
  static ItemParams uniform(int items, double slope, double intercept);

  static constexpr int slope_index(int item) { return 2 * item; }
  static constexpr int intercept_index(int item) { return 2 * item + 1; }

  int items() const { return static_cast<int>(values_.size() / 2); }
  int size() const { return static_cast<int>(values_.size()); }
  double slope(int item) const { return values_[slope_index(item)]; }
  double intercept(int item) const { return values_[intercept_index(item)]; }
  const Vector& flat() const { return values_; }

private:
  Vector values_;
};

// Bernoulli skill-mastery prior. Skill k is mastered with probability
// sigmoid(-eta_k); eta is a fixed constant, never estimated.
struct AttributePrior {
  Vector eta;

  // eta_k = -log(p / (1 - p)) so that sigmoid(-eta_k) = p for every skill.
  static AttributePrior from_mastery_probability(int skills, double p);
  int skills() const { return static_cast<int>(eta.size()); }
  double mastery_probability(int k) const;
  void validate() const;
};

// N(mu, sigma2 * I_2) prior shared by every item's (slope, intercept) pair.
struct GaussianPrior {
  Eigen::Vector2d mu{1.2, 0.6};
  double sigma2 = 4500.0;

  void validate() const;
};

// Attribute pattern as an integer: bit k of `bits` is alpha_k. Patterns are
// enumerated 0 .. 2^K - 1 in that order everywhere in the library.
class AttributePattern {
public:
  AttributePattern(std::uint32_t bits, int skills);
  static AttributePattern from_bits(std::span<const int> alpha);

  std::uint32_t bits() const { return bits_; }
  int skills() const { return skills_; }
  bool mastered(int k) const { return (bits_ >> k) & 1u; }

private:
  std::uint32_t bits_;
  int skills_;
};

// One candidate model: Q-matrix plus the two (fixed) priors.
struct ModelSpec {
  QMatrix q;
  AttributePrior attribute_prior;
  GaussianPrior param_prior;

  int items() const { return q.items(); }
  int skills() const { return q.skills(); }
  int num_params() const { return 2 * q.items(); }
  // Throws DimensionError if eta length differs from the Q-matrix width.
  void validate() const;
};

// The default spec: mastery probability 0.354, mu = (1.2, 0.6), sigma2 = 4500.
ModelSpec default_spec(QMatrix q);

} // namespace gimt_cdm
