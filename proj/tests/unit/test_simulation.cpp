#include <doctest.h>

#include <cmath>
#include <numeric>

#include "thr/error.hpp"
#include "thr/numeric.hpp"
#include "thr/simulation.hpp"

using namespace thr;

namespace {

ScenarioOptions with_noise() {
  ScenarioOptions o;
  o.mode = InterceptMode::WithNoise;
  return o;
}

double index_share(const Scenario& s, int arm, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(kSimDim);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    for (auto& v : x) v = g(rng);
    pos += s.index(arm, x) > 0;
  }
  return double(pos) / draws;
}

}  // namespace

TEST_CASE("intercept solver") {
  Rng rng(1);
  SUBCASE("zero coefficients, symmetric noise") {
    CHECK(std::abs(solve_intercept({0, 0, 0, 0, 0}, 1.0, 0.5, rng)) < 0.01);
  }
  SUBCASE("single standard normal term") {
    const double c = solve_intercept({0, 0, 1, 0, 0}, 1.0, 0.2, rng);
    CHECK(c == doctest::Approx(std::sqrt(2.0) * normal_quantile(0.2)).epsilon(0.01));
    CHECK(c == doctest::Approx(-1.1902).epsilon(0.01));
  }
  SUBCASE("noise-free index needs a continuous index") {
    CHECK_THROWS_AS(solve_intercept({0, 0, 0, 0, 0}, 1.0, 0.2, rng, InterceptMode::IndexOnly), SolverError);
    const double c = solve_intercept({0, 0, 1, 0, 0}, 1.0, 0.2, rng, InterceptMode::IndexOnly);
    CHECK(c == doctest::Approx(normal_quantile(0.2)).epsilon(0.01));
  }
  SUBCASE("unreachable or invalid targets") {
    CHECK_THROWS_AS(solve_intercept({0, 0, 1, 0, 0}, 1000.0, 0.001, rng, InterceptMode::WithNoise, 10000),
                    SolverError);
    CHECK_THROWS_AS(solve_intercept({0, 0, 1, 0, 0}, 1.0, 1.0, rng), ParameterError);
    CHECK_THROWS_AS(solve_intercept({0, 0, 1, 0, 0}, 1.0, 0.0, rng), ParameterError);
  }
}

TEST_CASE("scenario marginals") {
  SUBCASE("literal calibration matches the targets with noise") {
    for (int id : {1, 2}) {
      const auto s = make_scenario(id, 1.0, with_noise());
      const auto pop = population_summary(s, 1000000, 3);
      CHECK(std::abs(pop.p0 - kTargetControl) < 2e-3);
      CHECK(std::abs(pop.p1 - kTargetTreated) < 2e-3);
    }
  }
  SUBCASE("index calibration matches the targets on the index") {
    for (int id : {1, 2}) {
      const auto s = make_scenario(id, 2.0);
      CHECK(std::abs(index_share(s, 0, 1000000, 4) - kTargetControl) < 2e-3);
      CHECK(std::abs(index_share(s, 1, 1000000, 5) - kTargetTreated) < 2e-3);
    }
  }
  SUBCASE("coefficients") {
    const auto s1 = make_scenario(1, 1.0);
    CHECK(s1.beta0 == Coef5{1, 1, 1, 1, 1});
    CHECK(s1.beta1 == Coef5{1, 1, 1, 1, 1});
    const auto s2 = make_scenario(2, 1.0);
    CHECK(s2.beta1 == Coef5{-1.2, 1, -0.8, 0.5, -0.3});
    CHECK_THROWS_AS(make_scenario(3, 1.0), ParameterError);
    CHECK_THROWS_AS(make_scenario(1, -1.0), ParameterError);
  }
}

TEST_CASE("data generation") {
  const auto s = make_scenario(1, 1.0, with_noise());
  Rng rng(6);
  SUBCASE("complete randomization") {
    for (std::size_t n : {2u, 4u, 5u, 101u}) {
      const auto d = generate(s, n, rng);
      CHECK(d.data.arm_count(1) == n / 2);
      CHECK(d.data.dim() == kSimDim);
      for (std::size_t i = 0; i < n; ++i) CHECK(d.data.outcome(i) == (d.data.arm(i) ? d.y1[i] : d.y0[i]));
    }
    CHECK_THROWS_AS(generate(s, 1, rng), ParameterError);
  }
  SUBCASE("large-sample marginals") {
    const auto d = generate(s, 100000, rng);
    double p0 = 0, p1 = 0;
    for (std::size_t i = 0; i < d.y0.size(); ++i) {
      p0 += d.y0[i] == 1;
      p1 += d.y1[i] == 1;
    }
    CHECK(std::abs(p0 / 1e5 - 0.2) < 0.01);
    CHECK(std::abs(p1 / 1e5 - 0.4) < 0.01);
  }
  SUBCASE("very noisy outcomes are independent coins at the targets") {
    const auto noisy = make_scenario(2, 20.0, with_noise());
    const auto d = generate(noisy, 100000, rng);
    double p0 = 0, p1 = 0, both = 0;
    for (std::size_t i = 0; i < d.y0.size(); ++i) {
      p0 += d.y0[i] == 1;
      p1 += d.y1[i] == 1;
      both += d.y0[i] == 1 && d.y1[i] == 1;
    }
    p0 /= 1e5;
    p1 /= 1e5;
    CHECK(std::abs(p0 - 0.2) < 0.01);
    CHECK(std::abs(p1 - 0.4) < 0.01);
    CHECK(std::abs(both / 1e5 - p0 * p1) < 0.006);
  }
}

TEST_CASE("oracle conditional probabilities") {
  const auto s = make_scenario(1, 1.0);
  const std::vector<double> zero(kSimDim, 0.0);
  CHECK(oracle_mu(s, 0, zero) == doctest::Approx(normal_cdf(s.c0)));
  CHECK(oracle_mu(s, 1, zero) == doctest::Approx(normal_cdf(s.c1)));
  std::vector<double> x{0.3, -1, 2, 0.5, -0.1, 9, 9, 9, 9, 9};
  const double z = 3 * 0.09 + (-2.0) + 2 + 0.5 - 0.1;
  CHECK(s.index(0, x) == doctest::Approx(z + s.c0));

  const auto step = make_scenario(1, 0.0);
  Rng rng(7);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : x) v = g(rng);
    for (int a : {0, 1}) CHECK(oracle_mu(step, a, x) == (step.index(a, x) > 0 ? 1.0 : 0.0));
  }
  CHECK_THROWS_AS(oracle_mu(s, 0, std::vector<double>(3, 0.0)), ShapeError);

  const auto lit = make_scenario(1, 1.0, with_noise());
  double m = 0;
  for (int i = 0; i < 200000; ++i) {
    for (auto& v : x) v = g(rng);
    m += oracle_mu(lit, 0, x);
  }
  CHECK(std::abs(m / 200000 - 0.2) < 3e-3);
}

TEST_CASE("population quantities") {
  const std::array<std::pair<int, double>, 4> settings{{{1, 1.0}, {1, 2.0}, {2, 1.0}, {2, 2.0}}};
  const std::array<double, 4> reference{0.001, 0.019, 0.197, 0.206};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto s = make_scenario(settings[i].first, settings[i].second);
    const auto pop = population_summary(s, 1000000, 8, 2);
    CHECK(std::abs(pop.theta - reference[i]) < 0.003);
    CHECK(pop.theta_se > 0);
    CHECK(pop.sharp.lower <= pop.theta);
    CHECK(pop.theta <= pop.sharp.upper);
    CHECK(pop.naive.lower <= pop.sharp.lower + 1e-12);
    CHECK(pop.sharp.upper <= pop.naive.upper + 1e-12);
    CHECK(pop.naive.lower == doctest::Approx(std::max(0.0, pop.p0 - pop.p1)));
    CHECK(pop.naive.upper == doctest::Approx(std::min(pop.p0, 1 - pop.p1)));
  }
  const auto s = make_scenario(2, 1.0);
  const auto a = population_summary(s, 300000, 9, 1);
  const auto b = population_summary(s, 300000, 9, 3);
  CHECK(a.theta == b.theta);
  CHECK(a.sharp.upper == b.sharp.upper);
}

TEST_CASE("rep summaries") {
  std::vector<RepEstimate> reps(3);
  reps[0].ok = true;
  reps[0].bounds.lower = 0.1;
  reps[0].bounds.upper = 0.3;
  reps[1].ok = true;
  reps[1].bounds.lower = 0.25;
  reps[1].bounds.upper = 0.5;
  reps[2].ok = false;
  reps[2].error = "boom";
  const auto row = summarize_reps("naive", "partition", 0.2, reps, std::nullopt, std::nullopt);
  CHECK(row.mean_lower == doctest::Approx(0.175));
  CHECK(row.mean_upper == doctest::Approx(0.4));
  CHECK(row.bias == doctest::Approx(0.025));
  CHECK(row.width == doctest::Approx(0.225));
  CHECK(row.covr == doctest::Approx(0.5));
  CHECK(row.reps == 3);
  CHECK(row.failed == 1);
  CHECK(row.flagged);
  CHECK_FALSE(row.lcovr);
}

TEST_CASE("harness with a single rep reproduces that rep") {
  MonteCarloConfig c;
  c.scenario = 2;
  c.n = 300;
  c.reps = 1;
  c.ci_draws = 400;
  c.seed = 21;
  c.theta_draws = 100000;
  const auto r = run_monte_carlo(c);
  REQUIRE(r.rows.size() == 2);
  Rng rng = make_rng(c.seed, {stream::data, 0});
  const auto sim = generate(r.scenario, c.n, rng);
  const auto b = estimate_bounds(cell_stats(sim.data, naive_partition()));
  const auto& row = r.rows[0];
  CHECK(row.method == "naive");
  CHECK(row.mean_lower == b.lower);
  CHECK(row.mean_upper == b.upper);
  CHECK(row.width == doctest::Approx(b.upper - b.lower));
  const double theta = r.population.theta;
  CHECK(row.bias == doctest::Approx(std::max({b.lower - theta, theta - b.upper, 0.0})));
  CHECK(row.covr == (b.lower <= theta && theta <= b.upper ? 1.0 : 0.0));
  REQUIRE(row.ecovr);
  CHECK((*row.ecovr == 0.0 || *row.ecovr == 1.0));
  CHECK(r.rows[1].method == "oracle");
}

TEST_CASE("harness invariants") {
  const std::array<std::pair<int, double>, 4> settings{{{1, 1.0}, {1, 2.0}, {2, 1.0}, {2, 2.0}}};
  for (const auto& [id, sigma] : settings) {
    MonteCarloConfig c;
    c.scenario = id;
    c.sigma = sigma;
    c.n = 2000;
    c.reps = 20;
    c.seed = 3;
    c.theta_draws = 200000;
    ClassifierSpec f;
    f.forest.n_trees = 20;
    c.methods.push_back(MethodSpec::learner(f));
    const auto r = run_monte_carlo(c);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[1].width <= r.rows[0].width + 0.01);
    for (const auto& row : r.rows) {
      CHECK(row.failed == 0);
      CHECK(row.mean_lower <= row.mean_upper);
      CHECK(row.bias >= 0);
      CHECK(row.bias <= 1);
      CHECK(row.width >= 0);
      CHECK(row.width <= 1);
      CHECK(row.covr >= 0);
      CHECK(row.covr <= 1);
    }
    CHECK(r.rows[2].estimator == "partition");
    CHECK(r.rows[3].estimator == "plug-in");
    CHECK(r.rows[2].tmcr);
  }
}

TEST_CASE("harness is reproducible and thread independent") {
  MonteCarloConfig c;
  c.n = 200;
  c.reps = 6;
  c.ci_draws = 300;
  c.seed = 5;
  c.theta_draws = 50000;
  ClassifierSpec f;
  f.forest.n_trees = 10;
  c.methods.push_back(MethodSpec::learner(f, CalibrationMethod::Isotonic));
  const auto a = run_monte_carlo(c);
  c.threads = 3;
  const auto b = run_monte_carlo(c);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].method == b.rows[i].method);
    CHECK(a.rows[i].mean_lower == b.rows[i].mean_lower);
    CHECK(a.rows[i].mean_upper == b.rows[i].mean_upper);
    CHECK(a.rows[i].ecovr == b.rows[i].ecovr);
  }
  CHECK(a.rows[2].method == "forest+isotonic");
}

TEST_CASE("interval coverage for interior bounds in the heterogeneous design") {
  // Naive lower bound max{0, p0 - p1} sits on the boundary at 0 and is excluded.
  for (double alpha : {0.05, 0.25}) {
    MonteCarloConfig c;
    c.scenario = 2;
    c.n = 2000;
    c.reps = 300;
    c.alpha = alpha;
    c.ci_draws = 2000;
    c.seed = 77;
    c.theta_draws = 2000000;
    const auto r = run_monte_carlo(c);
    const auto& naive = r.rows[0];
    const auto& oracle = r.rows[1];
    const double nominal = 1 - alpha;
    MESSAGE("alpha " << alpha << ": naive U " << *naive.ucovr << ", oracle L " << *oracle.lcovr << ", oracle U "
                     << *oracle.ucovr);
    CHECK(std::abs(*naive.ucovr - nominal) <= 0.06);
    CHECK(std::abs(*oracle.lcovr - nominal) <= 0.06);
    CHECK(std::abs(*oracle.ucovr - nominal) <= 0.06);
  }
}

TEST_CASE("sigma sweep") {
  MonteCarloConfig c;
  c.n = 200;
  c.reps = 2;
  c.theta_draws = 20000;
  const auto pts = sweep_sigma(c, 0.0, 2.0, 3);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].sigma == 0.0);
  CHECK(pts[1].sigma == 1.0);
  CHECK(pts[2].sigma == 2.0);
  CHECK(pts[0].theta == 0.0);
  CHECK_THROWS_AS(sweep_sigma(c, 1.0, 0.5, 3), ParameterError);
  CHECK_THROWS_AS(sweep_sigma(c, 0.0, 1.0, 0), ParameterError);
}
