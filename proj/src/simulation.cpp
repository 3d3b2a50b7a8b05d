#include "thr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thr/error.hpp"
#include "thr/numeric.hpp"
#include "thr/parallel.hpp"

namespace thr {

std::string_view to_string(InterceptMode m) {
  return m == InterceptMode::IndexOnly ? "index-only" : "with-noise";
}

InterceptMode parse_intercept_mode(std::string_view s) {
  if (s == "index-only") return InterceptMode::IndexOnly;
  if (s == "with-noise") return InterceptMode::WithNoise;
  throw ParameterError("unknown intercept mode '" + std::string(s) + "' (index-only, with-noise)");
}

std::array<double, 5> sim_features(std::span<const double> x) {
  if (x.size() < 5) throw ShapeError("sim_features: need at least 5 covariates");
  return {3.0 * x[0] * x[0], x[1] * x[2], x[2], x[3], x[4]};
}

namespace {

double dot5(const Coef5& b, const std::array<double, 5>& z) {
  double s = 0;
  for (std::size_t i = 0; i < 5; ++i) s += b[i] * z[i];
  return s;
}

}  // namespace

double solve_intercept(const Coef5& beta, double sigma, double target, Rng& rng, InterceptMode mode,
                       std::size_t pool_size) {
  if (!(target > 0 && target < 1)) throw ParameterError("solve_intercept: target must lie in (0,1)");
  if (sigma < 0) throw ParameterError("solve_intercept: sigma must be >= 0");
  if (pool_size == 0) throw ParameterError("solve_intercept: empty pool");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> w(pool_size);
  std::array<double, 5> x{};
  for (auto& wi : w) {
    for (auto& xi : x) xi = gauss(rng);
    const double eps = gauss(rng);
    wi = dot5(beta, sim_features(x)) + (mode == InterceptMode::WithNoise ? sigma * eps : 0.0);
  }
  std::sort(w.begin(), w.end());
  const double total = static_cast<double>(pool_size);
  // g(c) = share of pool with w + c > 0; nondecreasing in c.
  auto g = [&](double c) {
    const auto above = w.end() - std::upper_bound(w.begin(), w.end(), -c);
    return static_cast<double>(above) / total;
  };
  double lo = -50, hi = 50;
  if (g(lo) > target || g(hi) < target) {
    throw SolverError("solve_intercept: target not bracketed by [-50, 50]");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < target) lo = mid;
    else hi = mid;
  }
  const double c = std::abs(g(lo) - target) < std::abs(g(hi) - target) ? lo : hi;
  if (std::abs(g(c) - target) >= 1e-3) {
    throw SolverError("solve_intercept: cannot reach the target within 1e-3 (step in the pooled law)");
  }
  return c;
}

double Scenario::index(int arm, std::span<const double> x) const {
  return dot5(beta(arm), sim_features(x)) + intercept(arm);
}

Scenario make_scenario(int id, double sigma, const ScenarioOptions& opts) {
  if (id != 1 && id != 2) throw ParameterError("scenario must be 1 or 2");
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw ParameterError("sigma must be finite and >= 0");
  Scenario s;
  s.id = id;
  s.sigma = sigma;
  s.mode = opts.mode;
  s.beta0 = {1, 1, 1, 1, 1};
  s.beta1 = id == 1 ? Coef5{1, 1, 1, 1, 1} : Coef5{-1.2, 1, -0.8, 0.5, -0.3};
  Rng r0 = make_rng(opts.pool_seed, {stream::pool, 0});
  Rng r1 = make_rng(opts.pool_seed, {stream::pool, 1});
  s.c0 = solve_intercept(s.beta0, sigma, kTargetControl, r0, opts.mode, opts.pool_size);
  s.c1 = solve_intercept(s.beta1, sigma, kTargetTreated, r1, opts.mode, opts.pool_size);
  return s;
}

SimulatedData generate(const Scenario& s, std::size_t n, Rng& rng) {
  if (n < 2) throw ParameterError("generate: n must be >= 2");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(n * kSimDim);
  SimulatedData out;
  out.y0.resize(n);
  out.y1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row(x.data() + i * kSimDim, kSimDim);
    for (auto& v : row) v = gauss(rng);
    const double e0 = gauss(rng), e1 = gauss(rng);
    out.y0[i] = s.index(0, row) + s.sigma * e0 > 0 ? 1 : -1;
    out.y1[i] = s.index(1, row) + s.sigma * e1 > 0 ? 1 : -1;
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> arms(n, 0);
  for (std::size_t r = 0; r < n / 2; ++r) arms[perm[r]] = 1;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = arms[i] == 1 ? out.y1[i] : out.y0[i];
  out.data = Dataset(Matrix(std::move(x), kSimDim), std::move(y), std::move(arms));
  return out;
}

double oracle_mu(const Scenario& s, int arm, std::span<const double> x) {
  if (x.size() != kSimDim) throw ShapeError("oracle_mu: x must have 10 entries");
  const double u = s.index(arm, x);
  if (s.sigma == 0) return u > 0 ? 1.0 : 0.0;
  return normal_cdf(u / s.sigma);
}

PopulationSummary population_summary(const Scenario& s, std::size_t draws, std::uint64_t seed, unsigned threads) {
  if (draws < 2) throw ParameterError("population_summary: need at least 2 draws");
  constexpr std::size_t kBlock = 1 << 16;
  const std::size_t blocks = (draws + kBlock - 1) / kBlock;
  struct Acc {
    double th = 0, th2 = 0, m0 = 0, m1 = 0, lo = 0, hi = 0;
  };
  std::vector<Acc> acc(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    Rng rng = make_rng(seed, {stream::pool, 0xB0B, b});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::array<double, kSimDim> x{};
    Acc a;
    const std::size_t end = std::min(draws, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      for (std::size_t d = 0; d < 5; ++d) x[d] = gauss(rng);
      const double mu0 = oracle_mu(s, 0, x), mu1 = oracle_mu(s, 1, x);
      const double t = mu0 * (1.0 - mu1);
      a.th += t;
      a.th2 += t * t;
      a.m0 += mu0;
      a.m1 += mu1;
      a.lo += std::max(0.0, mu0 - mu1);
      a.hi += std::min(mu0, 1.0 - mu1);
    }
    acc[b] = a;
  });
  Acc tot;
  for (const auto& a : acc) {
    tot.th += a.th;
    tot.th2 += a.th2;
    tot.m0 += a.m0;
    tot.m1 += a.m1;
    tot.lo += a.lo;
    tot.hi += a.hi;
  }
  const double n = static_cast<double>(draws);
  PopulationSummary p;
  p.draws = draws;
  p.theta = tot.th / n;
  p.theta_se = std::sqrt(std::max(0.0, tot.th2 / n - p.theta * p.theta) / (n - 1));
  p.p0 = tot.m0 / n;
  p.p1 = tot.m1 / n;
  auto finish = [](double lo, double hi) {
    BoundsEstimate b;
    b.lower = std::clamp(lo, 0.0, 1.0);
    b.upper = std::clamp(hi, b.lower, 1.0);
    b.information = 1.0 + b.lower - b.upper;
    return b;
  };
  p.naive = finish(std::max(0.0, p.p0 - p.p1), std::min(p.p0, 1.0 - p.p1));
  p.sharp = finish(tot.lo / n, tot.hi / n);
  return p;
}

std::string MethodSpec::label() const {
  switch (kind) {
    case Kind::Naive: return "naive";
    case Kind::Oracle: return "oracle";
    case Kind::Classifier: {
      std::string s(to_string(classifier.kind));
      if (calibration != CalibrationMethod::None) s += "+" + std::string(to_string(calibration));
      return s;
    }
  }
  return "?";
}

MetricsRow summarize_reps(const std::string& method, const std::string& estimator, double theta,
                          const std::vector<RepEstimate>& reps, std::optional<double> pop_lower,
                          std::optional<double> pop_upper) {
  MetricsRow row;
  row.method = method;
  row.estimator = estimator;
  row.theta = theta;
  row.reps = reps.size();
  std::size_t ok = 0, with_ci = 0, with_t = 0, with_c = 0;
  double lc = 0, uc = 0, ec = 0, tm = 0, cm = 0;
  Interval cil{0, 0}, ciu{0, 0}, cie{0, 0};
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& e = reps[r];
    if (!e.ok) {
      ++row.failed;
      row.failures.push_back("rep " + std::to_string(r) + ": " + e.error);
      continue;
    }
    ++ok;
    const double lo = e.bounds.lower, hi = e.bounds.upper;
    row.mean_lower += lo;
    row.mean_upper += hi;
    row.bias += std::max({lo - theta, theta - hi, 0.0});
    row.width += hi - lo;
    row.covr += (lo <= theta && theta <= hi) ? 1.0 : 0.0;
    if (e.tmcr) {
      tm += *e.tmcr;
      ++with_t;
    }
    if (e.cmcr) {
      cm += *e.cmcr;
      ++with_c;
    }
    if (e.ci) {
      ++with_ci;
      if (pop_lower) lc += e.ci->lower_bound.contains(*pop_lower) ? 1.0 : 0.0;
      if (pop_upper) uc += e.ci->upper_bound.contains(*pop_upper) ? 1.0 : 0.0;
      ec += e.ci->extended.contains(theta) ? 1.0 : 0.0;
      cil.lo += e.ci->lower_bound.lo;
      cil.hi += e.ci->lower_bound.hi;
      ciu.lo += e.ci->upper_bound.lo;
      ciu.hi += e.ci->upper_bound.hi;
      cie.lo += e.ci->extended.lo;
      cie.hi += e.ci->extended.hi;
    }
  }
  if (ok > 0) {
    const double k = static_cast<double>(ok);
    row.mean_lower /= k;
    row.mean_upper /= k;
    row.bias /= k;
    row.width /= k;
    row.covr /= k;
  }
  if (with_t) row.tmcr = tm / static_cast<double>(with_t);
  if (with_c) row.cmcr = cm / static_cast<double>(with_c);
  if (with_ci) {
    const double k = static_cast<double>(with_ci);
    if (pop_lower) row.lcovr = lc / k;
    if (pop_upper) row.ucovr = uc / k;
    row.ecovr = ec / k;
    row.mean_ci_lower = Interval{cil.lo / k, cil.hi / k};
    row.mean_ci_upper = Interval{ciu.lo / k, ciu.hi / k};
    row.mean_ci_extended = Interval{cie.lo / k, cie.hi / k};
  }
  row.flagged = ok == 0 || static_cast<double>(row.failed) > 0.01 * static_cast<double>(reps.size());
  return row;
}

namespace {

RepEstimate from_partition(const PartitionEstimate& pe) {
  RepEstimate e;
  e.ok = true;
  e.bounds = pe.bounds;
  e.ci = pe.ci;
  return e;
}

RepEstimate failed(const std::exception& ex) {
  RepEstimate e;
  e.error = ex.what();
  return e;
}


}  // namespace

MonteCarloResult run_monte_carlo(const MonteCarloConfig& config) {
  if (config.reps == 0) throw ParameterError("run_monte_carlo: reps must be >= 1");
  if (config.methods.empty()) throw ParameterError("run_monte_carlo: no methods");
  if (!(config.alpha > 0 && config.alpha < 1)) throw ParameterError("alpha must lie in (0,1)");
  MonteCarloResult res;
  res.config = config;
  res.scenario = make_scenario(config.scenario, config.sigma, config.scenario_options);
  res.population = population_summary(res.scenario, config.theta_draws, derive_seed(config.seed, {stream::pool}),
                                      config.threads);
  const Scenario& sc = res.scenario;

  // Output slots: one per (method, estimator).
  struct Slot {
    std::size_t method;
    bool plug_in;
  };
  std::vector<Slot> slots;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    slots.push_back({m, false});
    if (config.methods[m].kind == MethodSpec::Kind::Classifier) slots.push_back({m, true});
  }
  std::vector<std::vector<RepEstimate>> est(slots.size(), std::vector<RepEstimate>(config.reps));

  auto mu0 = [&sc](std::span<const double> x) { return oracle_mu(sc, 0, x); };
  auto mu1 = [&sc](std::span<const double> x) { return oracle_mu(sc, 1, x); };

  parallel_for(config.reps, config.threads, [&](std::size_t r) {
    Rng rng = make_rng(config.seed, {stream::data, r});
    const SimulatedData sim = generate(sc, config.n, rng);
    std::size_t slot = 0;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      const MethodSpec& ms = config.methods[m];
      const std::uint64_t ci_seed = derive_seed(config.seed, {stream::ci, r, m});
      try {
        switch (ms.kind) {
          case MethodSpec::Kind::Naive:
            est[slot][r] = from_partition(
                estimate_with_partition(sim.data, naive_partition(), config.alpha, config.ci_draws, ci_seed, 1));
            break;
          case MethodSpec::Kind::Oracle: {
            const Partition p = oracle_partition(mu0, mu1, kSimDim, derive_seed(config.seed, {stream::ties, r}));
            est[slot][r] = from_partition(
                estimate_with_partition(sim.data, p, config.alpha, config.ci_draws, ci_seed, 1));
            break;
          }
          case MethodSpec::Kind::Classifier: {
            CrossfitOptions o;
            o.k = config.k;
            o.classifier = ms.classifier;
            o.calibration = ms.calibration;
            o.alpha = config.alpha;
            o.ci_draws = config.ci_draws;
            o.seed = derive_seed(config.seed, {stream::model, r, m});
            o.threads = 1;
            o.plug_in = true;
            const CrossfitResult cf = crossfit_estimate(sim.data, o);
            RepEstimate part;
            part.ok = true;
            part.bounds = cf.aggregate.bounds;
            part.ci = cf.aggregate.ci;
            part.tmcr = cf.aggregate.tmcr;
            part.cmcr = cf.aggregate.cmcr;
            RepEstimate plug = part;
            plug.bounds = *cf.aggregate.plug_in;
            plug.ci.reset();
            est[slot][r] = std::move(part);
            est[slot + 1][r] = std::move(plug);
            break;
          }
        }
      } catch (const Error& e) {
        est[slot][r] = failed(e);
        if (ms.kind == MethodSpec::Kind::Classifier) est[slot + 1][r] = failed(e);
      }
      slot += ms.kind == MethodSpec::Kind::Classifier ? 2 : 1;
    }
  });

  const double theta = res.population.theta;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const MethodSpec& ms = config.methods[slots[s].method];
    std::optional<double> pl, pu;
    if (ms.kind == MethodSpec::Kind::Naive) {
      pl = res.population.naive.lower;
      pu = res.population.naive.upper;
    } else if (ms.kind == MethodSpec::Kind::Oracle) {
      pl = res.population.sharp.lower;
      pu = res.population.sharp.upper;
    }
    res.rows.push_back(summarize_reps(ms.label(), slots[s].plug_in ? "plug-in" : "partition", theta, est[s], pl, pu));
  }
  return res;
}

std::vector<SweepPoint> sweep_sigma(const MonteCarloConfig& config, double lo, double hi, std::size_t steps) {
  if (steps == 0) throw ParameterError("sweep_sigma: steps must be >= 1");
  if (!(lo >= 0) || !(hi >= lo)) throw ParameterError("sweep_sigma: need 0 <= lo <= hi");
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < steps; ++i) {
    MonteCarloConfig c = config;
    c.sigma = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    const auto r = run_monte_carlo(c);
    out.push_back({c.sigma, r.population.theta, r.rows});
  }
  return out;
}

}  // namespace thr
