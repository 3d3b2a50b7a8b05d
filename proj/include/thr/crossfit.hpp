#pragma once

// K-fold cross-fitting: nuisance models and the plug-in partition are fitted
// on the other folds, bounds and intervals are computed on the held-out
// fold, and fold results are averaged in fold order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thr/bounds.hpp"
#include "thr/calibration.hpp"
#include "thr/classifiers.hpp"
#include "thr/dataset.hpp"
#include "thr/inference.hpp"
#include "thr/partitioning.hpp"

namespace thr {

struct CrossfitOptions {
  std::size_t k = 2;
  ClassifierSpec classifier;
  CalibrationMethod calibration = CalibrationMethod::None;
  std::optional<std::size_t> k_cal;  // unset: same as k
  double alpha = 0.05;
  std::size_t ci_draws = 10000;      // 0 skips the confidence intervals
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> ci_seed;  // unset: derived from seed
  unsigned threads = 1;
  bool plug_in = true;               // also compute the pointwise plug-in bounds
};

struct CellSummary {
  std::string label;
  std::size_t count = 0;
  double share = 0;
  std::size_t n_control = 0;
  std::size_t n_treated = 0;
  std::optional<double> mu_control;
  std::optional<double> mu_treated;
};

/// Bounds and intervals for one evaluation sample under a fixed partition.
struct PartitionEstimate {
  std::vector<CellSummary> cells;  // after merging
  BoundsEstimate bounds;
  std::optional<IntervalSet> ci;
  std::size_t ci_resampled = 0;
};

std::vector<CellSummary> summarize_cells(const CellStats& stats);

/// Estimate on `data` with a partition that does not depend on it.
/// ci_seed feeds the Monte-Carlo interval draws.
PartitionEstimate estimate_with_partition(const Dataset& data, const Partition& partition, double alpha,
                                          std::size_t ci_draws, std::uint64_t ci_seed, unsigned threads);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_eval = 0;
  PartitionEstimate estimate;
  std::optional<BoundsEstimate> plug_in;
  std::uint64_t mu0_fingerprint = 0;
  std::uint64_t mu1_fingerprint = 0;
  std::array<std::size_t, 2> eval_errors{0, 0};  // misclassified held-out rows per arm
  std::array<std::size_t, 2> eval_arm_n{0, 0};
  std::vector<std::string> warnings;
};

struct CrossfitAggregate {
  BoundsEstimate bounds;
  std::optional<BoundsEstimate> plug_in;
  std::optional<IntervalSet> ci;
  std::optional<double> tmcr;  // pooled held-out error, treated arm
  std::optional<double> cmcr;  // control arm
};

struct CrossfitResult {
  std::size_t n = 0;
  CrossfitOptions options;
  std::vector<FoldResult> folds;
  CrossfitAggregate aggregate;
  std::vector<std::string> warnings;
};

/// Models for one training split: one per arm, fitted only on `train`'s rows
/// of that arm. Deterministic in (train, options, fold).
struct ArmModels {
  ModelPtr mu0;
  ModelPtr mu1;
  std::vector<std::string> warnings;
};
ArmModels fit_arm_models(const Dataset& train, const CrossfitOptions& options, std::size_t fold);

/// With ClassifierKind::Naive no model is fitted and the single-cell
/// partition is evaluated on the whole sample (reported as one fold).
/// Otherwise requires 2 <= k <= n.
CrossfitResult crossfit_estimate(const Dataset& data, const CrossfitOptions& options);

/// Averages endpoint-wise in the given order.
CrossfitAggregate aggregate_folds(const std::vector<FoldResult>& folds);

}  // namespace thr
