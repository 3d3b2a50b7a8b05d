#pragma once

// Simulation design: X ~ N(0, I_10), Z = (3 X1^2, X2 X3, X3, X4, X5),
// Y(a) = +1 iff beta_a . Z + c_a + eps_a > 0 with independent per-arm
// eps_a ~ N(0, sigma^2), complete randomization with floor(n/2) treated.
// Plus the Monte-Carlo harness computing Bias / Width / CovR per method.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thr/calibration.hpp"
#include "thr/classifiers.hpp"
#include "thr/crossfit.hpp"
#include "thr/dataset.hpp"

namespace thr {

inline constexpr std::size_t kSimDim = 10;
inline constexpr double kTargetControl = 0.2;
inline constexpr double kTargetTreated = 0.4;

/// How the intercepts are matched to the target marginals.
///  IndexOnly: P(beta . Z + c > 0) = target (noise-free index). Reproduces
///             theta of 0.0010, 0.0192, 0.1966, 0.2063 (S1/S2 x sigma 1/2).
///  WithNoise: P(beta . Z + c + eps > 0) = target, the literal reading.
enum class InterceptMode { IndexOnly, WithNoise };

std::string_view to_string(InterceptMode m);
InterceptMode parse_intercept_mode(std::string_view s);

using Coef5 = std::array<double, 5>;

std::array<double, 5> sim_features(std::span<const double> x);

/// Bisection for c on g(c) = P(beta . Z + c [+ eps] > 0) estimated from a
/// fixed pool of `pool_size` draws. Throws SolverError when [-50, 50] does
/// not bracket the target or the tolerance 1e-3 cannot be met.
double solve_intercept(const Coef5& beta, double sigma, double target, Rng& rng,
                       InterceptMode mode = InterceptMode::WithNoise, std::size_t pool_size = 1000000);

struct Scenario {
  int id = 1;
  Coef5 beta0{};
  Coef5 beta1{};
  double sigma = 1;
  double c0 = 0;
  double c1 = 0;
  InterceptMode mode = InterceptMode::IndexOnly;

  const Coef5& beta(int arm) const { return arm == 1 ? beta1 : beta0; }
  double intercept(int arm) const { return arm == 1 ? c1 : c0; }
  /// beta_a . z(x) + c_a
  double index(int arm, std::span<const double> x) const;
};

struct ScenarioOptions {
  InterceptMode mode = InterceptMode::IndexOnly;
  std::size_t pool_size = 1000000;
  std::uint64_t pool_seed = 20240601;
};

/// Scenario 1: beta0 = beta1 = (1,1,1,1,1). Scenario 2: beta1 = (-1.2, 1,
/// -0.8, 0.5, -0.3). Intercepts target P(Y(0)=1)=0.2, P(Y(1)=1)=0.4.
Scenario make_scenario(int id, double sigma, const ScenarioOptions& opts = {});

struct SimulatedData {
  Dataset data;
  std::vector<int> y0;  // potential outcomes, +-1
  std::vector<int> y1;
};

SimulatedData generate(const Scenario& s, std::size_t n, Rng& rng);

/// P(Y(a)=1 | x) = Phi(index / sigma); a step function when sigma = 0.
double oracle_mu(const Scenario& s, int arm, std::span<const double> x);

struct PopulationSummary {
  double theta = 0;
  double theta_se = 0;
  double p0 = 0;            // P(Y(0)=1)
  double p1 = 0;            // P(Y(1)=1)
  BoundsEstimate naive;     // Frechet-Hoeffding from the marginals
  BoundsEstimate sharp;     // E max{0, mu0-mu1}, E min{mu0, 1-mu1}
  std::size_t draws = 0;
};

/// Monte-Carlo integration over X (independent per-arm errors).
PopulationSummary population_summary(const Scenario& s, std::size_t draws = 10000000, std::uint64_t seed = 1,
                                     unsigned threads = 1);

// ---------------------------------------------------------------------------
// Monte-Carlo harness

struct MethodSpec {
  enum class Kind { Naive, Oracle, Classifier };
  Kind kind = Kind::Naive;
  ClassifierSpec classifier;
  CalibrationMethod calibration = CalibrationMethod::None;

  std::string label() const;
  static MethodSpec naive() { return {}; }
  static MethodSpec oracle() { return {Kind::Oracle, {}, CalibrationMethod::None}; }
  static MethodSpec learner(ClassifierSpec c, CalibrationMethod cal = CalibrationMethod::None) {
    return {Kind::Classifier, c, cal};
  }
};

struct MonteCarloConfig {
  int scenario = 1;
  std::size_t n = 500;
  double sigma = 1;
  std::size_t reps = 200;
  std::vector<MethodSpec> methods{MethodSpec::naive(), MethodSpec::oracle()};
  std::size_t k = 2;
  double alpha = 0.05;
  std::size_t ci_draws = 0;  // 0: no confidence intervals
  std::uint64_t seed = 1;
  unsigned threads = 1;
  ScenarioOptions scenario_options;
  std::size_t theta_draws = 10000000;
};

struct MetricsRow {
  std::string method;     // naive, oracle, forest, forest+isotonic, ...
  std::string estimator;  // partition or plug-in
  double theta = 0;
  double mean_lower = 0;
  double mean_upper = 0;
  double bias = 0;
  double width = 0;
  double covr = 0;
  std::optional<double> tmcr;
  std::optional<double> cmcr;
  // Interval metrics (present when ci_draws > 0 and the estimator has them).
  std::optional<double> lcovr;  // C_L covers the population lower bound
  std::optional<double> ucovr;  // C_U covers the population upper bound
  std::optional<double> ecovr;  // extended interval covers theta
  std::optional<Interval> mean_ci_lower;
  std::optional<Interval> mean_ci_upper;
  std::optional<Interval> mean_ci_extended;
  std::size_t reps = 0;
  std::size_t failed = 0;
  bool flagged = false;  // more than 1% of reps failed
  std::vector<std::string> failures;
};

/// One replication's outcome for one estimator.
struct RepEstimate {
  bool ok = false;
  std::string error;
  BoundsEstimate bounds;
  std::optional<IntervalSet> ci;
  std::optional<double> tmcr;
  std::optional<double> cmcr;
};

struct MonteCarloResult {
  MonteCarloConfig config;
  Scenario scenario;
  PopulationSummary population;
  std::vector<MetricsRow> rows;
};

/// Bias/Width/CovR etc. over reps. pop_lower/pop_upper, when known, are the
/// population values of the partition bounds targeted by C_L / C_U.
MetricsRow summarize_reps(const std::string& method, const std::string& estimator, double theta,
                          const std::vector<RepEstimate>& reps, std::optional<double> pop_lower,
                          std::optional<double> pop_upper);

MonteCarloResult run_monte_carlo(const MonteCarloConfig& config);

struct SweepPoint {
  double sigma = 0;
  double theta = 0;
  std::vector<MetricsRow> rows;
};

/// Runs the harness at `steps` equally spaced sigma values in [lo, hi].
std::vector<SweepPoint> sweep_sigma(const MonteCarloConfig& config, double lo, double hi, std::size_t steps);

}  // namespace thr
