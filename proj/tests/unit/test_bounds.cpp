#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "thr/bounds.hpp"
#include "thr/error.hpp"

using namespace thr;

namespace {

Dataset make_data(std::vector<double> x, std::vector<int> y, std::vector<int> a) {
  return Dataset(Matrix(std::move(x), 1), std::move(y), std::move(a));
}

Partition split_at_zero() {
  return Partition({CellLabel::lower_side(1), CellLabel::lower_side(-1)},
                   [](std::span<const double> x) -> std::size_t { return x[0] < 0 ? 0 : 1; });
}

CellStats random_stats(Rng& rng, std::size_t cells) {
  std::uniform_int_distribution<std::size_t> cnt(1, 40);
  CellStats s;
  for (std::size_t j = 0; j < cells; ++j) {
    s.labels.push_back(at_pair_cells()[j]);
    const std::size_t n0 = cnt(rng), n1 = cnt(rng);
    s.count.push_back(n0 + n1);
    s.arm_count.push_back({n0, n1});
    s.successes.push_back({std::uniform_int_distribution<std::size_t>(0, n0)(rng),
                           std::uniform_int_distribution<std::size_t>(0, n1)(rng)});
    s.n += n0 + n1;
  }
  return s;
}

}  // namespace

TEST_CASE("hand-counted single cell") {
  // control outcomes {+1,+1}, treated {+1,-1}
  const auto d = make_data({0, 1, 2, 3}, {1, 1, 1, -1}, {0, 0, 1, 1});
  const auto s = cell_stats(d, naive_partition());
  CHECK(s.n == 4);
  CHECK(*s.mu(0, 0) == 1.0);
  CHECK(*s.mu(1, 0) == 0.5);
  const auto b = estimate_bounds(s);
  CHECK(b.lower == 0.5);
  CHECK(b.upper == 0.5);
  CHECK(b.information == 1.0);
}

TEST_CASE("cell stats bookkeeping") {
  const auto d = make_data({-1, -2, 1, 2, 3, -3}, {1, -1, -1, 1, 1, -1}, {0, 1, 0, 1, 1, 0});
  const auto s = cell_stats(d, split_at_zero());
  CHECK(s.count[0] + s.count[1] == 6);
  for (std::size_t j = 0; j < 2; ++j) CHECK(s.arm_count[j][0] + s.arm_count[j][1] == s.count[j]);

  SUBCASE("empty cell has no mu and contributes nothing") {
    const auto e = make_data({1, 2, 3, 4}, {1, -1, -1, 1}, {0, 0, 1, 1});
    const auto es = cell_stats(e, split_at_zero());
    CHECK(es.count[0] == 0);
    CHECK_FALSE(es.mu(0, 0).has_value());
    CHECK_FALSE(es.degenerate(0));
    const auto b = estimate_bounds(es);
    CHECK(b.lower == 0.0);
    CHECK(b.upper == doctest::Approx(0.5));
  }
  SUBCASE("row permutation leaves counts unchanged") {
    std::vector<std::size_t> perm{5, 3, 1, 0, 4, 2};
    const auto p = cell_stats(d.subset(perm), split_at_zero());
    CHECK(p.count == s.count);
    CHECK(p.arm_count == s.arm_count);
    CHECK(p.successes == s.successes);
  }
  SUBCASE("out-of-range cell index") {
    const std::vector<std::size_t> bad{0, 0, 0, 7, 0, 0};
    CHECK_THROWS_AS(cell_stats(d, bad, {CellLabel::whole()}), InvariantError);
  }
}

TEST_CASE("zero control success gives [0, 0]") {
  const auto d = make_data({-1, -2, 1, 2, 3, -3}, {-1, 1, -1, -1, 1, -1}, {0, 1, 0, 1, 1, 0});
  const auto b = estimate_bounds(cell_stats(d, split_at_zero()));
  CHECK(b.lower == 0.0);
  CHECK(b.upper == 0.0);
}

TEST_CASE("degenerate cells") {
  // cell 0 (x<0) has only control rows
  const auto d = make_data({-1, -2, 1, 2, 3, 4}, {1, -1, -1, 1, 1, -1}, {0, 0, 0, 1, 1, 0});
  const auto s = cell_stats(d, split_at_zero());
  CHECK(s.degenerate(0));
  try {
    estimate_bounds(s);
    FAIL("expected DegenerateCellError");
  } catch (const DegenerateCellError& e) {
    CHECK(e.cell() == 0);
    CHECK(e.label() == "L,t=+1");
  }
  CellStats merged;
  const auto b = estimate_bounds_merging(s, &merged);
  REQUIRE(b.merged_cells.size() == 1);
  CHECK(b.merged_cells[0].from == "L,t=+1");
  CHECK(b.merged_cells[0].into == "L,t=-1");
  CHECK(merged.num_cells() == 1);
  CHECK(merged.count[0] == 6);
  const auto naive = estimate_bounds(cell_stats(d, naive_partition()));
  CHECK(b.lower == naive.lower);
  CHECK(b.upper == naive.upper);

  const auto one_arm = make_data({-1, 1}, {1, -1}, {0, 0});
  CHECK_THROWS_AS(estimate_bounds_merging(cell_stats(one_arm, split_at_zero())), DegenerateCellError);
}

TEST_CASE("plug-in bounds with constant models") {
  const auto d = make_data({0, 1, 2}, {1, -1, 1}, {0, 1, 1});
  const auto b = plug_in_bounds(*constant_model(0.2, 1), *constant_model(0.4, 1), d);
  CHECK(b.lower == 0.0);
  CHECK(b.upper == doctest::Approx(0.2));
  const auto eq = plug_in_bounds(*constant_model(0.7, 1), *constant_model(0.7, 1), d);
  CHECK(eq.lower == 0.0);
}

TEST_CASE("per-cell inequality on random pairs") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100000; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK_LE(std::max(0.0, a - b), std::min(a, 1 - b));
  }
}

TEST_CASE("fuzzed stats keep 0 <= lower <= upper <= 1") {
  Rng rng(2);
  int bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto s = random_stats(rng, 1 + i % 4);
    const auto b = estimate_bounds(s);
    // independent raw sums, no clamping
    double lo = 0, hi = 0;
    for (std::size_t j = 0; j < s.num_cells(); ++j) {
      const double m0 = double(s.successes[j][0]) / s.arm_count[j][0];
      const double m1 = double(s.successes[j][1]) / s.arm_count[j][1];
      lo += double(s.count[j]) / s.n * std::max(0.0, m0 - m1);
      hi += double(s.count[j]) / s.n * std::min(m0, 1 - m1);
    }
    if (!(0 <= lo && lo <= hi && hi <= 1 + 1e-15)) ++bad;
    if (std::abs(lo - b.lower) > 1e-12 || std::abs(hi - b.upper) > 1e-12) ++bad;
    if (!(0 <= b.lower && b.lower <= b.upper && b.upper <= 1)) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("finer partitions give nested population bounds") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<std::size_t> cell4(0, 3);
  for (int pair = 0; pair < 200; ++pair) {
    const std::size_t K = 12;
    std::vector<double> w(K), m0(K), m1(K);
    std::vector<std::size_t> fine(K), coarse(K);
    std::array<std::size_t, 4> merge{};
    for (auto& m : merge) m = std::uniform_int_distribution<std::size_t>(0, 1)(rng);
    for (std::size_t k = 0; k < K; ++k) {
      w[k] = u(rng);
      m0[k] = u(rng);
      m1[k] = u(rng);
      fine[k] = cell4(rng);
      coarse[k] = merge[fine[k]];
    }
    const auto bf = population_bounds(w, m0, m1, fine);
    const auto bc = population_bounds(w, m0, m1, coarse);
    CHECK(bf.lower >= bc.lower - 1e-12);
    CHECK(bf.upper <= bc.upper + 1e-12);
    // the atom-level partition is finest of all and gives the sharp bounds
    std::vector<std::size_t> atoms(K);
    std::iota(atoms.begin(), atoms.end(), 0);
    const auto sharp = sharp_population_bounds(w, m0, m1);
    const auto ba = population_bounds(w, m0, m1, atoms);
    CHECK(ba.lower == doctest::Approx(sharp.lower).epsilon(1e-12));
    CHECK(ba.upper == doctest::Approx(sharp.upper).epsilon(1e-12));
    CHECK(sharp.lower >= bf.lower - 1e-12);
    CHECK(sharp.upper <= bf.upper + 1e-12);
  }
}

TEST_CASE("cell means are unbiased under re-randomization") {
  Rng rng(4);
  const std::size_t n = 120;
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(n);
  std::vector<int> y0(n), y1(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = g(rng);
    y0[i] = u(rng) < (x[i] < 0 ? 0.3 : 0.6) ? 1 : -1;
    y1[i] = u(rng) < (x[i] < 0 ? 0.5 : 0.2) ? 1 : -1;
  }
  const auto part = split_at_zero();
  std::array<std::array<double, 2>, 2> truth{};  // [cell][arm]
  std::array<double, 2> size{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = x[i] < 0 ? 0 : 1;
    size[c] += 1;
    truth[c][0] += y0[i] == 1;
    truth[c][1] += y1[i] == 1;
  }
  for (auto c : {0, 1})
    for (auto a : {0, 1}) truth[c][a] /= size[c];

  const int reps = 2000;
  std::array<std::array<double, 2>, 2> sum{}, sum2{};
  std::array<std::array<int, 2>, 2> used{};
  std::vector<int> arms(n);
  for (std::size_t i = 0; i < n / 2; ++i) arms[i] = 1;
  for (int r = 0; r < reps; ++r) {
    std::shuffle(arms.begin(), arms.end(), rng);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = arms[i] ? y1[i] : y0[i];
    const auto s = cell_stats(Dataset(Matrix(x, 1), y, arms), part);
    for (std::size_t c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a)
        if (auto m = s.mu(a, c)) {
          sum[c][a] += *m;
          sum2[c][a] += *m * *m;
          ++used[c][a];
        }
  }
  for (std::size_t c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a) {
      const double mean = sum[c][a] / used[c][a];
      const double var = sum2[c][a] / used[c][a] - mean * mean;
      const double se = std::sqrt(var / used[c][a]);
      CHECK(std::abs(mean - truth[c][a]) <= 3 * se + 1e-12);
    }
}

TEST_CASE("estimated information is biased upwards") {
  // Discrete toy: four atoms, two cells.
  const std::vector<double> w{0.3, 0.2, 0.25, 0.25};
  const std::vector<double> m0{0.5, 0.3, 0.6, 0.45};
  const std::vector<double> m1{0.45, 0.6, 0.55, 0.5};
  const std::vector<std::size_t> cell{0, 0, 1, 1};
  const auto pop = population_bounds(w, m0, m1, cell);

  Rng rng(5);
  std::discrete_distribution<std::size_t> atom(w.begin(), w.end());
  std::uniform_real_distribution<double> u(0, 1);
  const std::size_t n = 200;
  double info = 0, info2 = 0;
  const int reps = 2000;
  int done = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> x(n);
    std::vector<int> y(n), a(n);
    std::vector<std::size_t> c(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = atom(rng);
      x[i] = static_cast<double>(k);
      a[i] = i < n / 2 ? 1 : 0;
      y[i] = u(rng) < (a[i] ? m1[k] : m0[k]) ? 1 : -1;
      c[i] = cell[k];
    }
    const auto s = cell_stats(Dataset(Matrix(x, 1), y, a), c, {CellLabel::lower_side(1), CellLabel::lower_side(-1)});
    if (s.degenerate(0) || s.degenerate(1)) continue;
    const double i_hat = estimate_bounds(s).information;
    info += i_hat;
    info2 += i_hat * i_hat;
    ++done;
  }
  const double mean = info / done;
  const double se = std::sqrt((info2 / done - mean * mean) / done);
  CHECK(done > 1990);
  CHECK(mean >= pop.information - 3 * se);
}

TEST_CASE("population bounds argument checks") {
  const std::vector<double> w{1.0}, bad{1.5}, ok{0.5};
  const std::vector<std::size_t> c{0};
  CHECK_THROWS_AS(population_bounds(w, bad, ok, c), ParameterError);
  CHECK_THROWS_AS(sharp_population_bounds(w, ok, std::vector<double>{}), ShapeError);
}
