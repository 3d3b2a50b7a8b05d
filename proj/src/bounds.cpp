#include "thr/bounds.hpp"

#include <algorithm>

#include "thr/error.hpp"

namespace thr {

std::optional<double> CellStats::mu(int arm, std::size_t cell) const {
  const auto m = arm_count.at(cell)[arm];
  if (m == 0) return std::nullopt;
  return static_cast<double>(successes[cell][arm]) / static_cast<double>(m);
}

bool CellStats::degenerate(std::size_t cell) const {
  return count[cell] > 0 && (arm_count[cell][0] == 0 || arm_count[cell][1] == 0);
}

CellStats cell_stats(const Dataset& data, std::span<const std::size_t> cell_of,
                     std::vector<CellLabel> labels) {
  if (cell_of.size() != data.size()) throw ShapeError("cell_stats: one cell index per row required");
  CellStats s;
  s.n = data.size();
  const std::size_t j = labels.size();
  s.labels = std::move(labels);
  s.count.assign(j, 0);
  s.arm_count.assign(j, {0, 0});
  s.successes.assign(j, {0, 0});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = cell_of[i];
    if (c >= j) throw InvariantError("cell_stats: cell index out of range");
    const int a = data.arm(i);
    ++s.count[c];
    ++s.arm_count[c][a];
    if (data.outcome(i) == 1) ++s.successes[c][a];
  }
  return s;
}

CellStats cell_stats(const Dataset& data, const Partition& partition) {
  const auto cells = partition.assign(data.covariates());
  return cell_stats(data, cells, partition.cells());
}

BoundsEstimate estimate_bounds(const CellStats& stats) {
  if (stats.n == 0) throw ParameterError("estimate_bounds: empty sample");
  BoundsEstimate b;
  double lo = 0, hi = 0;
  for (std::size_t j = 0; j < stats.num_cells(); ++j) {
    if (stats.count[j] == 0) continue;
    if (stats.degenerate(j)) {
      const auto label = stats.labels.at(j).to_string();
      throw DegenerateCellError("cell " + label + " has observations from only one arm", j, label);
    }
    const double w = static_cast<double>(stats.count[j]) / static_cast<double>(stats.n);
    const double m0 = *stats.mu(0, j), m1 = *stats.mu(1, j);
    lo += w * std::max(0.0, m0 - m1);
    hi += w * std::min(m0, 1.0 - m1);
  }
  // Per-cell max{0,a-b} <= min{a,1-b}; clamping only absorbs rounding.
  b.lower = std::clamp(lo, 0.0, 1.0);
  b.upper = std::clamp(hi, b.lower, 1.0);
  b.information = 1.0 + b.lower - b.upper;
  return b;
}

CellStats merge_degenerate_cells(const CellStats& stats, std::vector<CellMerge>* merges) {
  CellStats s = stats;
  for (;;) {
    std::size_t bad = s.num_cells();
    for (std::size_t j = 0; j < s.num_cells(); ++j) {
      if (s.degenerate(j)) {
        bad = j;
        break;
      }
    }
    if (bad == s.num_cells()) return s;

    std::size_t into = s.num_cells();
    for (std::size_t j = 0; j < s.num_cells(); ++j) {
      if (j == bad || s.count[j] == 0) continue;
      if (into == s.num_cells() || s.count[j] > s.count[into]) into = j;
    }
    if (into == s.num_cells()) {
      const auto label = s.labels[bad].to_string();
      throw DegenerateCellError("one treatment arm is absent from the evaluation sample", bad, label);
    }
    if (merges) merges->push_back({s.labels[bad].to_string(), s.labels[into].to_string()});
    s.count[into] += s.count[bad];
    for (int a = 0; a < 2; ++a) {
      s.arm_count[into][a] += s.arm_count[bad][a];
      s.successes[into][a] += s.successes[bad][a];
    }
    s.labels.erase(s.labels.begin() + static_cast<std::ptrdiff_t>(bad));
    s.count.erase(s.count.begin() + static_cast<std::ptrdiff_t>(bad));
    s.arm_count.erase(s.arm_count.begin() + static_cast<std::ptrdiff_t>(bad));
    s.successes.erase(s.successes.begin() + static_cast<std::ptrdiff_t>(bad));
  }
}

BoundsEstimate estimate_bounds_merging(const CellStats& stats, CellStats* merged_stats) {
  std::vector<CellMerge> merges;
  CellStats s = merge_degenerate_cells(stats, &merges);
  BoundsEstimate b = estimate_bounds(s);
  b.merged_cells = std::move(merges);
  if (merged_stats) *merged_stats = std::move(s);
  return b;
}

BoundsEstimate plug_in_bounds(const ProbModel& mu0, const ProbModel& mu1, const Dataset& eval_data) {
  if (eval_data.size() == 0) throw ParameterError("plug_in_bounds: empty evaluation sample");
  double lo = 0, hi = 0;
  for (std::size_t i = 0; i < eval_data.size(); ++i) {
    const double m0 = predict_proba(mu0, eval_data.x(i));
    const double m1 = predict_proba(mu1, eval_data.x(i));
    lo += std::max(0.0, m0 - m1);
    hi += std::min(m0, 1.0 - m1);
  }
  BoundsEstimate b;
  const double n = static_cast<double>(eval_data.size());
  b.lower = std::clamp(lo / n, 0.0, 1.0);
  b.upper = std::clamp(hi / n, b.lower, 1.0);
  b.information = 1.0 + b.lower - b.upper;
  return b;
}

namespace {

void check_atoms(std::span<const double> weight, std::span<const double> mu0, std::span<const double> mu1) {
  if (mu0.size() != weight.size() || mu1.size() != weight.size()) {
    throw ShapeError("population bounds: atom arrays differ in length");
  }
  for (std::size_t k = 0; k < weight.size(); ++k) {
    if (weight[k] < 0 || mu0[k] < 0 || mu0[k] > 1 || mu1[k] < 0 || mu1[k] > 1) {
      throw ParameterError("population bounds: weights must be >= 0 and probabilities in [0,1]");
    }
  }
}

BoundsEstimate finish(double lo, double hi) {
  BoundsEstimate b;
  b.lower = std::clamp(lo, 0.0, 1.0);
  b.upper = std::clamp(hi, b.lower, 1.0);
  b.information = 1.0 + b.lower - b.upper;
  return b;
}

}  // namespace

BoundsEstimate population_bounds(std::span<const double> weight, std::span<const double> mu0,
                                 std::span<const double> mu1, std::span<const std::size_t> cell_of) {
  check_atoms(weight, mu0, mu1);
  if (cell_of.size() != weight.size()) throw ShapeError("population_bounds: one cell per atom required");
  std::size_t j = 0;
  for (auto c : cell_of) j = std::max(j, c + 1);
  std::vector<double> w(j, 0), s0(j, 0), s1(j, 0);
  double total = 0;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    w[cell_of[k]] += weight[k];
    s0[cell_of[k]] += weight[k] * mu0[k];
    s1[cell_of[k]] += weight[k] * mu1[k];
    total += weight[k];
  }
  if (total <= 0) throw ParameterError("population_bounds: total weight must be positive");
  double lo = 0, hi = 0;
  for (std::size_t c = 0; c < j; ++c) {
    if (w[c] <= 0) continue;
    const double m0 = s0[c] / w[c], m1 = s1[c] / w[c];
    lo += w[c] * std::max(0.0, m0 - m1);
    hi += w[c] * std::min(m0, 1.0 - m1);
  }
  return finish(lo / total, hi / total);
}

BoundsEstimate sharp_population_bounds(std::span<const double> weight, std::span<const double> mu0,
                                       std::span<const double> mu1) {
  check_atoms(weight, mu0, mu1);
  double lo = 0, hi = 0, total = 0;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    lo += weight[k] * std::max(0.0, mu0[k] - mu1[k]);
    hi += weight[k] * std::min(mu0[k], 1.0 - mu1[k]);
    total += weight[k];
  }
  if (total <= 0) throw ParameterError("sharp_population_bounds: total weight must be positive");
  return finish(lo / total, hi / total);
}

}  // namespace thr
