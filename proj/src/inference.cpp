#include "thr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thr/error.hpp"
#include "thr/numeric.hpp"
#include "thr/parallel.hpp"

namespace thr {

std::vector<std::int64_t> hypergeometric_strata(std::span<const std::size_t> counts, std::int64_t m_total) {
  const auto n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n == 0 || counts.empty()) throw ParameterError("hypergeometric_strata: no observations");
  if (m_total < static_cast<std::int64_t>(n)) throw ParameterError("hypergeometric_strata: M must be >= n");
  std::vector<std::int64_t> s(counts.size());
  std::int64_t total = 0;
  std::size_t largest = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    s[j] = std::llround(static_cast<double>(counts[j]) * static_cast<double>(m_total) / static_cast<double>(n));
    total += s[j];
    if (counts[j] > counts[largest]) largest = j;
  }
  s[largest] += m_total - total;
  if (s[largest] < 0) throw InvariantError("hypergeometric_strata: negative stratum after rounding");
  return s;
}

std::vector<std::size_t> draw_cell_sizes(std::span<const std::int64_t> strata, std::size_t n, Rng& rng) {
  std::int64_t remaining_pop = std::accumulate(strata.begin(), strata.end(), std::int64_t{0});
  auto remaining = static_cast<std::int64_t>(n);
  std::vector<std::size_t> out(strata.size(), 0);
  for (std::size_t j = 0; j + 1 < strata.size(); ++j) {
    const auto k = sample_hypergeometric(remaining_pop, strata[j], remaining, rng);
    out[j] = static_cast<std::size_t>(k);
    remaining -= k;
    remaining_pop -= strata[j];
  }
  if (!strata.empty()) out.back() = static_cast<std::size_t>(remaining);
  return out;
}

std::vector<std::vector<std::size_t>> sample_cell_sizes(std::size_t n, std::span<const std::size_t> counts,
                                                        std::size_t draws, Rng& rng,
                                                        std::optional<std::int64_t> m_total) {
  if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) != n) {
    throw ParameterError("sample_cell_sizes: cell counts must sum to n");
  }
  if (draws == 0) throw ParameterError("sample_cell_sizes: need at least one draw");
  const auto strata = hypergeometric_strata(counts, m_total.value_or(100 * static_cast<std::int64_t>(n)));
  std::vector<std::vector<std::size_t>> out;
  out.reserve(draws);
  for (std::size_t b = 0; b < draws; ++b) out.push_back(draw_cell_sizes(strata, n, rng));
  return out;
}

std::optional<double> cell_variance(std::size_t successes, std::size_t arm_n, std::size_t cell_n,
                                    std::size_t cell_draw) {
  if (arm_n == 0 || cell_n == 0) throw ParameterError("cell_variance: empty arm or cell");
  const double s = static_cast<double>(successes), na = static_cast<double>(arm_n);
  const double ss = s - s * s / na;
  if (ss <= 0) return 0.0;
  const double m = static_cast<double>(cell_draw) * na / static_cast<double>(cell_n);
  const double denom = m * (m - 1.0);
  if (!(denom > 0)) return std::nullopt;
  return ss / denom;
}

namespace {

constexpr std::size_t kBlock = 512;

}  // namespace

BoundDistributions simulate_bound_distributions(const CellStats& stats, const SimulationOptions& opts) {
  if (opts.draws == 0) throw ParameterError("simulate_bound_distributions: need at least one draw");
  if (stats.n == 0) throw ParameterError("simulate_bound_distributions: empty sample");
  for (std::size_t j = 0; j < stats.num_cells(); ++j) {
    if (stats.degenerate(j)) {
      const auto label = stats.labels.at(j).to_string();
      throw DegenerateCellError("simulate_bound_distributions: cell " + label + " lacks an arm", j, label);
    }
  }
  const std::size_t J = stats.num_cells();
  const auto strata = hypergeometric_strata(stats.count, opts.m_total.value_or(100 * static_cast<std::int64_t>(stats.n)));
  std::vector<double> mu0(J, 0), mu1(J, 0);
  for (std::size_t j = 0; j < J; ++j) {
    if (stats.count[j] == 0) continue;
    mu0[j] = *stats.mu(0, j);
    mu1[j] = *stats.mu(1, j);
  }

  BoundDistributions out;
  out.lower.resize(opts.draws);
  out.upper.resize(opts.draws);
  const std::size_t blocks = (opts.draws + kBlock - 1) / kBlock;
  std::vector<std::size_t> resampled(blocks, 0);
  const double n = static_cast<double>(stats.n);

  parallel_for(blocks, opts.threads, [&](std::size_t blk) {
    Rng rng = make_rng(opts.seed, {stream::ci, blk});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> var0(J), var1(J);
    const std::size_t end = std::min(opts.draws, (blk + 1) * kBlock);
    for (std::size_t b = blk * kBlock; b < end; ++b) {
      std::vector<std::size_t> nstar;
      std::size_t attempts = 0;
      for (;;) {
        nstar = draw_cell_sizes(strata, stats.n, rng);
        bool ok = true;
        for (std::size_t j = 0; j < J && ok; ++j) {
          if (nstar[j] == 0 || stats.count[j] == 0) {
            var0[j] = var1[j] = 0;
            continue;
          }
          const auto v0 = cell_variance(stats.successes[j][0], stats.arm_count[j][0], stats.count[j], nstar[j]);
          const auto v1 = cell_variance(stats.successes[j][1], stats.arm_count[j][1], stats.count[j], nstar[j]);
          ok = v0.has_value() && v1.has_value();
          if (ok) {
            var0[j] = *v0;
            var1[j] = *v1;
          }
        }
        if (ok) break;
        ++resampled[blk];
        if (++attempts >= opts.max_resamples) {
          throw DegeneracyError("simulate_bound_distributions: cells too small for the variance formula");
        }
      }
      double lo = 0, hi = 0;
      for (std::size_t j = 0; j < J; ++j) {
        if (nstar[j] == 0) continue;
        const double w = static_cast<double>(nstar[j]) / n;
        const double d = mu0[j] - mu1[j] + std::sqrt(var0[j] + var1[j]) * gauss(rng);
        const double u0 = mu0[j] + std::sqrt(var0[j]) * gauss(rng);
        const double u1 = mu1[j] + std::sqrt(var1[j]) * gauss(rng);
        lo += w * std::max(0.0, d);
        hi += w * std::min(u0, 1.0 - u1);
      }
      out.lower[b] = lo;
      out.upper[b] = hi;
    }
  });

  std::sort(out.lower.begin(), out.lower.end());
  std::sort(out.upper.begin(), out.upper.end());
  out.resampled = std::accumulate(resampled.begin(), resampled.end(), std::size_t{0});
  return out;
}

double upper_quantile(std::span<const double> sorted, double alpha) {
  return type1_quantile(sorted, 1.0 - alpha);
}

namespace {

Interval reflected(double estimate, std::span<const double> sorted, double alpha) {
  const double hi_q = upper_quantile(sorted, alpha / 2);
  const double lo_q = upper_quantile(sorted, 1.0 - alpha / 2);
  Interval iv;
  iv.lo = std::clamp(2 * estimate - hi_q, 0.0, 1.0);
  iv.hi = std::clamp(2 * estimate - lo_q, 0.0, 1.0);
  iv.lo = std::min(iv.lo, iv.hi);
  return iv;
}

}  // namespace

IntervalSet confidence_intervals(const BoundDistributions& dist, const BoundsEstimate& estimate, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ParameterError("alpha must lie in (0,1)");
  if (dist.lower.empty() || dist.upper.empty()) throw ParameterError("confidence_intervals: empty distribution");
  IntervalSet s;
  s.alpha = alpha;
  s.lower_bound = reflected(estimate.lower, dist.lower, alpha);
  s.upper_bound = reflected(estimate.upper, dist.upper, alpha);
  s.extended = {s.lower_bound.lo, std::max(s.lower_bound.lo, s.upper_bound.hi)};
  return s;
}

}  // namespace thr
