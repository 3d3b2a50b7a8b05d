#pragma once

// Monte-Carlo sampling distributions of the estimated bounds and the
// reflected quantile confidence intervals built from them.
//
// Cell sizes n* are redrawn from a multivariate hypergeometric law (n items
// from strata of sizes n_j*M/n); given n*, each cell contributes a normal
// draw around its arm frequencies with variance
//   sigma2_{a,j} = SS_{a,j} / (m (m - 1)),   m = n*_j n_{a,j} / n_j,
// SS_{a,j} being the within-arm sum of squares of the 0/1 success indicator.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "thr/bounds.hpp"
#include "thr/random.hpp"

namespace thr {

/// Stratum sizes n_j*M/n rounded, with the rounding residual added to the
/// largest stratum so they sum to M.
std::vector<std::int64_t> hypergeometric_strata(std::span<const std::size_t> counts, std::int64_t m_total);

/// One multivariate hypergeometric draw of `n` items from the given strata.
std::vector<std::size_t> draw_cell_sizes(std::span<const std::int64_t> strata, std::size_t n, Rng& rng);

/// B draws of n*. M defaults to 100 n.
std::vector<std::vector<std::size_t>> sample_cell_sizes(std::size_t n, std::span<const std::size_t> counts,
                                                        std::size_t draws, Rng& rng,
                                                        std::optional<std::int64_t> m_total = std::nullopt);

/// sigma2 for one arm of one cell given n*_j. Zero when the arm outcome is
/// constant; nullopt when m (m - 1) <= 0 and the draw has to be redone.
std::optional<double> cell_variance(std::size_t successes, std::size_t arm_n, std::size_t cell_n,
                                    std::size_t cell_draw);

struct BoundDistributions {
  std::vector<double> lower;  // ascending
  std::vector<double> upper;  // ascending
  std::size_t resampled = 0;  // n* draws rejected for a nonpositive variance denominator
};

struct SimulationOptions {
  std::size_t draws = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<std::int64_t> m_total;  // default 100 n
  std::size_t max_resamples = 1000;     // per draw
};

/// Requires no degenerate cells (merge first). Results depend only on the
/// stats and options.seed, never on the thread count.
BoundDistributions simulate_bound_distributions(const CellStats& stats, const SimulationOptions& opts);

struct Interval {
  double lo = 0;
  double hi = 0;
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

struct IntervalSet {
  Interval lower_bound;  // for L
  Interval upper_bound;  // for U
  Interval extended;     // for theta
  double alpha = 0.05;
};

/// Upper alpha-quantile of an ascending sample (type-1 order statistic at
/// probability 1 - alpha).
double upper_quantile(std::span<const double> sorted, double alpha);

/// C_L = [2L - xi_{alpha/2}, 2L - xi_{1-alpha/2}] clipped to [0,1], likewise
/// C_U; the extended interval is [C_L.lo, C_U.hi].
IntervalSet confidence_intervals(const BoundDistributions& dist, const BoundsEstimate& estimate, double alpha);

}  // namespace thr
