#pragma once

// Trial data: binary outcome in {-1,+1}, binary arm in {0,1}, dense real
// covariates. Datasets are immutable once constructed.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thr/random.hpp"

namespace thr {

/// Dense row-major matrix of covariates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : data_(rows * cols, 0.0), rows_(rows), cols_(cols) {}
  Matrix(std::vector<double> data, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const std::vector<double>& values() const noexcept { return data_; }

  Matrix select_rows(std::span<const std::size_t> idx) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::vector<double> data_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Read-only view of one observation.
struct Sample {
  int outcome;  // -1 or +1
  int arm;      // 0 or 1
  std::span<const double> covariates;
};

class Dataset {
 public:
  Dataset() = default;
  /// Validates outcome/arm domains and covariate width; throws on violation.
  Dataset(Matrix covariates, std::vector<int> outcomes, std::vector<int> arms);

  std::size_t size() const noexcept { return outcomes_.size(); }
  std::size_t dim() const noexcept { return covariates_.cols(); }

  Sample sample(std::size_t i) const {
    return {outcomes_[i], arms_[i], covariates_.row(i)};
  }
  int outcome(std::size_t i) const { return outcomes_[i]; }
  int arm(std::size_t i) const { return arms_[i]; }
  std::span<const double> x(std::size_t i) const { return covariates_.row(i); }

  const Matrix& covariates() const noexcept { return covariates_; }
  const std::vector<int>& outcomes() const noexcept { return outcomes_; }
  const std::vector<int>& arms() const noexcept { return arms_; }

  std::size_t arm_count(int a) const;

  Dataset subset(std::span<const std::size_t> idx) const;
  /// Row indices belonging to arm `a`, optionally restricted to `within`.
  std::vector<std::size_t> arm_indices(int a) const;

  /// Throws ParameterError unless both arms are represented.
  void require_both_arms() const;

  bool operator==(const Dataset&) const = default;

 private:
  Matrix covariates_;
  std::vector<int> outcomes_;
  std::vector<int> arms_;
};

/// Column configuration for CSV ingestion.
struct CsvSchema {
  std::string outcome_col = "y";
  std::string arm_col = "a";
  /// Explicit names, or a single entry ending in '*' to match by prefix.
  /// Empty means "every other column".
  std::vector<std::string> covariate_cols;
  /// Raw outcome value mapped to +1. Unset: {0,1} -> 1 is favorable;
  /// {-1,1} -> identity.
  std::optional<double> favorable_value;
};

/// Parses a comma list ("x1,x2") or prefix glob ("x*") into schema form.
std::vector<std::string> parse_covariate_cols(const std::string& spec);

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema);

/// Writes columns y,a,x1..xp with full round-trip precision.
void write_csv(const Dataset& data, const std::filesystem::path& path);
std::string to_csv(const Dataset& data);

struct FoldAssignment {
  std::vector<std::size_t> fold_of;
  std::size_t k = 0;

  std::vector<std::size_t> members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::size_t fold) const;
  std::vector<std::size_t> sizes() const;
};

/// Uniformly random balanced assignment of n rows to k folds (sizes differ
/// by at most one). Requires 2 <= k <= n.
FoldAssignment split_folds(std::size_t n, std::size_t k, Rng& rng);
inline FoldAssignment split_folds(const Dataset& data, std::size_t k, Rng& rng) {
  return split_folds(data.size(), k, rng);
}

}  // namespace thr
