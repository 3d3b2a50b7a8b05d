#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "thr/dataset.hpp"
#include "thr/error.hpp"

using namespace thr;

namespace {

CsvSchema default_schema() { return {}; }

Dataset random_dataset(std::size_t n, std::size_t p, Rng& rng) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(n * p);
  for (auto& v : x) v = g(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
  std::vector<int> y(n), a(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng() % 2 ? 1 : -1;
    a[i] = static_cast<int>(rng() % 2);
  }
  a[0] = 0;
  a[1] = 1;
  return Dataset(Matrix(std::move(x), p), std::move(y), std::move(a));
}

}  // namespace

TEST_CASE("0/1 outcomes map 1 to +1 by default") {
  const auto d = parse_csv("y,a,x1,x2\n1,0,0.5,1\n0,1,1.5,2\n1,1,-2,3\n", default_schema());
  REQUIRE(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.outcomes() == std::vector<int>{1, -1, 1});
  CHECK(d.arms() == std::vector<int>{0, 1, 1});
  CHECK(d.x(2)[0] == -2);
}

TEST_CASE("-1/1 outcomes pass through unchanged") {
  const auto d = parse_csv("y,a,x\n-1,0,1\n1,1,2\n", default_schema());
  CHECK(d.outcomes() == std::vector<int>{-1, 1});
}

TEST_CASE("favorable value picks the +1 level") {
  CsvSchema s;
  s.favorable_value = 0;
  const auto d = parse_csv("y,a,x\n1,0,1\n0,1,2\n", s);
  CHECK(d.outcomes() == std::vector<int>{-1, 1});
  s.favorable_value = 7;
  CHECK_THROWS_AS(parse_csv("y,a,x\n1,0,1\n0,1,2\n", s), EncodingError);
}

TEST_CASE("custom column names and covariate selection") {
  CsvSchema s;
  s.outcome_col = "cd4";
  s.arm_col = "trt";
  s.covariate_cols = parse_covariate_cols("z*");
  const auto d = parse_csv("id,z1,cd4,trt,z2,w\n1,0.1,1,0,0.2,9\n2,0.3,0,1,0.4,9\n", s);
  CHECK(d.dim() == 2);
  CHECK(d.x(1)[1] == 0.4);
  s.covariate_cols = parse_covariate_cols("w,z1");
  const auto e = parse_csv("id,z1,cd4,trt,z2,w\n1,0.1,1,0,0.2,9\n2,0.3,0,1,0.4,9\n", s);
  CHECK(e.dim() == 2);
  CHECK(e.x(0)[0] == 9);
  CHECK(e.x(0)[1] == 0.1);
}

TEST_CASE("quoted fields are accepted") {
  const auto d = parse_csv("\"y\",\"a\",\"x\"\n\"1\",0,\"2.5\"\n0,1,3\n", default_schema());
  CHECK(d.x(0)[0] == 2.5);
}

TEST_CASE("domain and schema errors") {
  SUBCASE("arm outside {0,1} names the line") {
    try {
      parse_csv("y,a,x\n1,0,1\n0,2,2\n", default_schema());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
      CHECK(e.row() == 3);
    }
  }
  SUBCASE("missing column") { CHECK_THROWS_AS(parse_csv("y,x\n1,1\n", default_schema()), SchemaError); }
  SUBCASE("non-numeric covariate carries the row") {
    try {
      parse_csv("y,a,x\n1,0,1\n0,1,abc\n", default_schema());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == 3);
    }
  }
  SUBCASE("missing cell rejected") { CHECK_THROWS_AS(parse_csv("y,a,x\n1,0,\n0,1,2\n", default_schema()), ParseError); }
  SUBCASE("more than two outcome values") {
    CHECK_THROWS_AS(parse_csv("y,a,x\n1,0,1\n0,1,2\n2,1,3\n", default_schema()), EncodingError);
  }
  SUBCASE("no covariates") { CHECK_THROWS_AS(parse_csv("y,a\n1,0\n0,1\n", default_schema()), SchemaError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_csv("/nonexistent/t.csv", default_schema()), SchemaError); }
}

TEST_CASE("dataset constructor validates domains") {
  CHECK_THROWS_AS(Dataset(Matrix(std::vector<double>{1, 2}, 1), {1, 0}, {0, 1}), EncodingError);
  CHECK_THROWS_AS(Dataset(Matrix(std::vector<double>{1, 2}, 1), {1, -1}, {0, 3}), ParameterError);
  CHECK_THROWS_AS(Dataset(Matrix(std::vector<double>{1, 2}, 1), {1}, {0, 1}), ShapeError);
  const Dataset one_arm(Matrix(std::vector<double>{1, 2}, 1), {1, -1}, {0, 0});
  CHECK_THROWS_AS(one_arm.require_both_arms(), ParameterError);
}

TEST_CASE("csv round trip is exact") {
  Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const auto d = random_dataset(2 + rng() % 30, 1 + rng() % 5, rng);
    CHECK(parse_csv(to_csv(d), default_schema()) == d);
  }
  const auto d = random_dataset(10, 3, rng);
  const auto path = std::filesystem::temp_directory_path() / "thr_roundtrip.csv";
  write_csv(d, path);
  CHECK(load_csv(path, default_schema()) == d);
  std::filesystem::remove(path);
}

TEST_CASE("split_folds balance and determinism") {
  Rng r1(5), r2(5);
  const auto f4 = split_folds(4, 2, r1);
  CHECK(f4.sizes() == std::vector<std::size_t>{2, 2});
  auto s5 = split_folds(5, 2, r1).sizes();
  std::sort(s5.begin(), s5.end());
  CHECK(s5 == std::vector<std::size_t>{2, 3});

  Rng a(77), b(77);
  CHECK(split_folds(50, 3, a).fold_of == split_folds(50, 3, b).fold_of);

  CHECK_THROWS_AS(split_folds(5, 1, r2), ParameterError);
  CHECK_THROWS_AS(split_folds(5, 6, r2), ParameterError);
}

TEST_CASE("split_folds is balanced within one and covers every index once") {
  Rng rng(1);
  for (std::size_t n = 2; n <= 40; ++n) {
    for (std::size_t k = 2; k <= n; ++k) {
      const auto f = split_folds(n, k, rng);
      const auto sizes = f.sizes();
      const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*mx - *mn <= 1);
      std::set<std::size_t> seen;
      for (std::size_t j = 0; j < k; ++j) {
        for (auto i : f.members(j)) CHECK(seen.insert(i).second);
        CHECK(f.members(j).size() + f.complement(j).size() == n);
      }
      CHECK(seen.size() == n);
    }
  }
}

TEST_CASE("subset and arm indices") {
  const auto d = parse_csv("y,a,x\n1,0,1\n0,1,2\n1,1,3\n0,0,4\n", default_schema());
  CHECK(d.arm_indices(1) == std::vector<std::size_t>{1, 2});
  CHECK(d.arm_count(0) == 2);
  const std::vector<std::size_t> idx{3, 1};
  const auto s = d.subset(idx);
  CHECK(s.size() == 2);
  CHECK(s.x(0)[0] == 4);
  CHECK(s.arm(1) == 1);
}
