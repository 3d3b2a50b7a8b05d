#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "thr/error.hpp"
#include "thr/numeric.hpp"
#include "thr/parallel.hpp"
#include "thr/random.hpp"

using namespace thr;

namespace {

// Exact hypergeometric pmf by direct products of binomials (small arguments).
double choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double hyper_pmf(int pop, int marked, int draws, int k) {
  return choose(marked, k) * choose(pop - marked, draws - k) / choose(pop, draws);
}

}  // namespace

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-1) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
  for (double p : {1e-10, 1e-5, 0.001, 0.02, 0.2, 0.5, 0.7, 0.975, 0.99999}) {
    const double q = normal_quantile(p);
    CHECK(std::abs(normal_cdf(q) - p) <= 1e-12 * std::max(p, 1e-3));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(std::isinf(normal_quantile(1.0)));
  CHECK_THROWS_AS(normal_quantile(1.5), ParameterError);
}

TEST_CASE("sigmoid is stable at extremes") {
  CHECK(sigmoid(0) == 0.5);
  CHECK(sigmoid(800) == 1.0);
  CHECK(sigmoid(-800) >= 0.0);
  CHECK(sigmoid(-30) == doctest::Approx(std::exp(-30) / (1 + std::exp(-30))).epsilon(1e-12));
}

TEST_CASE("hypergeometric sampler matches the exact pmf") {
  Rng rng(11);
  const int pop = 20, marked = 7, draws = 8, reps = 200000;
  std::map<int, int> freq;
  for (int i = 0; i < reps; ++i) ++freq[static_cast<int>(sample_hypergeometric(pop, marked, draws, rng))];
  double total = 0;
  for (int k = 0; k <= draws; ++k) {
    const double p = hyper_pmf(pop, marked, draws, k);
    total += p;
    const double f = static_cast<double>(freq[k]) / reps;
    const double se = std::sqrt(p * (1 - p) / reps);
    CHECK(std::abs(f - p) <= 5 * se + 1e-9);
  }
  CHECK(total == doctest::Approx(1.0));
  for (const auto& [k, c] : freq) {
    CHECK(k >= 0);
    CHECK(k <= draws);
  }
}

TEST_CASE("hypergeometric support edges and large populations") {
  Rng rng(3);
  CHECK(sample_hypergeometric(10, 10, 4, rng) == 4);
  CHECK(sample_hypergeometric(10, 0, 4, rng) == 0);
  CHECK(sample_hypergeometric(10, 3, 10, rng) == 3);
  CHECK(sample_hypergeometric(10, 3, 0, rng) == 0);
  // draws > unmarked forces a floor
  for (int i = 0; i < 100; ++i) CHECK(sample_hypergeometric(10, 8, 5, rng) >= 3);
  CHECK_THROWS_AS(sample_hypergeometric(10, 11, 2, rng), ParameterError);
  CHECK_THROWS_AS(sample_hypergeometric(10, 2, 11, rng), ParameterError);

  const std::int64_t N = 200000, K = 60000, n = 2000;
  double s = 0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) s += static_cast<double>(sample_hypergeometric(N, K, n, rng));
  const double mean = s / reps, expect = static_cast<double>(n * K) / N;
  const double var = n * (double(K) / N) * (1 - double(K) / N) * double(N - n) / (N - 1);
  CHECK(std::abs(mean - expect) < 4 * std::sqrt(var / reps));
}

TEST_CASE("type-1 quantile picks order statistics without interpolation") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(type1_quantile(v, 0.0) == 1);
  CHECK(type1_quantile(v, 0.25) == 1);
  CHECK(type1_quantile(v, 0.26) == 2);
  CHECK(type1_quantile(v, 0.5) == 2);
  CHECK(type1_quantile(v, 0.51) == 3);
  CHECK(type1_quantile(v, 1.0) == 4);
}

TEST_CASE("seed derivation is a pure function of its path") {
  CHECK(derive_seed(5, {1, 2}) == derive_seed(5, {1, 2}));
  CHECK(derive_seed(5, {1, 2}) != derive_seed(5, {2, 1}));
  CHECK(derive_seed(5, {1}) != derive_seed(6, {1}));
  CHECK(derive_seed(5, {}) != derive_seed(5, {0}));
}

TEST_CASE("parallel_for writes the same slots for any thread count") {
  auto run = [](unsigned threads) {
    std::vector<std::uint64_t> out(257);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = make_rng(9, {i})(); });
    return out;
  };
  CHECK(run(1) == run(4));
  CHECK(run(1) == run(0));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("fnv fingerprints differ on different content") {
  std::vector<double> a{1.0, 2.0}, b{1.0, 2.0000000001};
  CHECK(Fnv1a().add(std::span<const double>(a)).value() != Fnv1a().add(std::span<const double>(b)).value());
  CHECK(Fnv1a().add(std::span<const double>(a)).value() == Fnv1a().add(std::span<const double>(a)).value());
}
