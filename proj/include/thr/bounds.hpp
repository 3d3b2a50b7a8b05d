#pragma once

// Partition-based bounds on the treatment harm rate
//   L = sum_j rho_j max{0, mu0_j - mu1_j},   U = sum_j rho_j min{mu0_j, 1 - mu1_j}
// estimated from per-cell arm frequencies, plus the pointwise plug-in
// comparator and exact population bounds for discrete toys.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thr/classifiers.hpp"
#include "thr/dataset.hpp"
#include "thr/partitioning.hpp"

namespace thr {

struct CellStats {
  std::vector<CellLabel> labels;
  std::size_t n = 0;
  std::vector<std::size_t> count;                    // n_j
  std::vector<std::array<std::size_t, 2>> arm_count;  // n_{a,j}
  std::vector<std::array<std::size_t, 2>> successes;  // #{Y = +1} per arm and cell

  std::size_t num_cells() const noexcept { return count.size(); }
  /// mu_hat_{a,j}; unset when the arm is empty in the cell.
  std::optional<double> mu(int arm, std::size_t cell) const;
  /// n_j > 0 with one arm empty.
  bool degenerate(std::size_t cell) const;
};

CellStats cell_stats(const Dataset& data, const Partition& partition);
/// Same, given precomputed cell indices (one per row).
CellStats cell_stats(const Dataset& data, std::span<const std::size_t> cell_of,
                     std::vector<CellLabel> labels);

struct CellMerge {
  std::string from;  // label of the degenerate cell
  std::string into;  // label of the receiving cell
};

struct BoundsEstimate {
  double lower = 0;
  double upper = 0;
  double information = 1;
  std::vector<CellMerge> merged_cells;
};

/// Throws DegenerateCellError for the first cell with n_j > 0 and one arm
/// empty. Empty cells contribute nothing.
BoundsEstimate estimate_bounds(const CellStats& stats);

/// Folds each degenerate cell into the largest remaining nonempty cell
/// until none is left. The merges are recorded in the returned copy's
/// labels (receiving cell keeps its label). Throws DegenerateCellError when
/// the whole sample lacks an arm.
CellStats merge_degenerate_cells(const CellStats& stats, std::vector<CellMerge>* merges = nullptr);

/// merge_degenerate_cells followed by estimate_bounds, with merges recorded.
BoundsEstimate estimate_bounds_merging(const CellStats& stats, CellStats* merged_stats = nullptr);

/// Pointwise plug-in bounds averaged over eval rows.
BoundsEstimate plug_in_bounds(const ProbModel& mu0, const ProbModel& mu1, const Dataset& eval_data);

/// Exact bounds for a discrete covariate space: atom k has probability
/// weight[k], true mu0[k], mu1[k], and sits in cell cell_of[k].
BoundsEstimate population_bounds(std::span<const double> weight, std::span<const double> mu0,
                                 std::span<const double> mu1, std::span<const std::size_t> cell_of);

/// Sharp bounds E max{0, mu0-mu1}, E min{mu0, 1-mu1} on a discrete space.
BoundsEstimate sharp_population_bounds(std::span<const double> weight, std::span<const double> mu0,
                                       std::span<const double> mu1);

}  // namespace thr
