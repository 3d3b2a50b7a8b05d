#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "thr/random.hpp"

namespace thr {

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step; absolute error below 1e-12 on (0,1)).
double normal_quantile(double p);

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Draws from the hypergeometric distribution: number of marked items in a
/// sample of `draws` taken without replacement from `population` items of
/// which `marked` are marked. Exact inversion starting from the mode.
std::int64_t sample_hypergeometric(std::int64_t population, std::int64_t marked,
                                   std::int64_t draws, Rng& rng);

/// Order-statistic quantile with no interpolation: the ceil(p*n)-th smallest
/// element (1-based), clamped to [1, n]. `sorted` must be ascending.
double type1_quantile(std::span<const double> sorted, double p);

/// 64-bit FNV-1a over raw bytes; used for model fingerprints and hash-seeded
/// tie breaking.
class Fnv1a {
 public:
  Fnv1a& add_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  template <typename T>
  Fnv1a& add(const T& v) {
    return add_bytes(&v, sizeof(T));
  }
  Fnv1a& add(std::span<const double> v) { return add_bytes(v.data(), v.size_bytes()); }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace thr
