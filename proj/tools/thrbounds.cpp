// thrbounds: bounds on the treatment harm rate from trial data, and the
// simulation harness.
//
//   thrbounds estimate --input trial.csv --classifier forest --k 2 --alpha 0.25
//   thrbounds simulate --scenario 1 --n 500 --sigma 1 --reps 200 --seed 7
//   thrbounds simulate --sweep-sigma 0:5:11 --classifier forest --csv curves.csv
//   thrbounds generate --scenario 2 --n 1000 --seed 3 --output sim.csv

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "thr/crossfit.hpp"
#include "thr/dataset.hpp"
#include "thr/error.hpp"
#include "thr/parallel.hpp"
#include "thr/report.hpp"
#include "thr/simulation.hpp"

namespace {

struct ModelFlags {
  std::string classifier = "forest";
  std::string calibrate = "none";
  int trees = 100;
  int min_leaf = 5;
  int max_depth = 0;
  int mtry = 0;
  std::size_t knn_k = 0;
  double ridge = 1e-4;

  thr::ClassifierSpec spec() const {
    thr::ClassifierSpec s;
    s.kind = thr::parse_classifier_kind(classifier);
    s.ridge = ridge;
    if (knn_k > 0) s.knn_k = knn_k;
    s.forest.n_trees = trees;
    s.forest.min_leaf = min_leaf;
    if (max_depth > 0) s.forest.max_depth = max_depth;
    if (mtry > 0) s.forest.features_per_split = mtry;
    return s;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--classifier", m.classifier, "naive, logit, gnb, knn or forest")->capture_default_str();
  cmd->add_option("--calibrate", m.calibrate, "none, isotonic or platt")->capture_default_str();
  cmd->add_option("--trees", m.trees, "forest size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--min-leaf", m.min_leaf, "forest minimum leaf size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", m.max_depth, "forest depth cap (0: none)")->capture_default_str();
  cmd->add_option("--mtry", m.mtry, "features tried per split (0: ceil(sqrt(p)))")->capture_default_str();
  cmd->add_option("--knn-k", m.knn_k, "neighbours (0: ceil(sqrt(n)))")->capture_default_str();
  cmd->add_option("--ridge", m.ridge, "logistic ridge penalty")->capture_default_str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw thr::ParameterError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw thr::ParameterError("failed writing '" + path + "'");
}

std::string dump(const thr::Json& j) { return j.dump(2) + "\n"; }

struct SweepSpec {
  double lo = 0, hi = 0;
  std::size_t steps = 0;
};

SweepSpec parse_sweep(const std::string& s) {
  SweepSpec sw;
  char c1 = 0, c2 = 0;
  std::istringstream is(s);
  long long steps = 0;
  if (!(is >> sw.lo >> c1 >> sw.hi >> c2 >> steps) || c1 != ':' || c2 != ':' || !is.eof() || steps < 1) {
    throw thr::ParameterError("--sweep-sigma expects lo:hi:steps, got '" + s + "'");
  }
  sw.steps = static_cast<std::size_t>(steps);
  return sw;
}

std::vector<thr::MethodSpec> parse_methods(const std::string& list, const ModelFlags& m) {
  std::vector<thr::MethodSpec> out;
  std::stringstream ss(list);
  std::string item;
  const auto cal = thr::parse_calibration_method(m.calibrate);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "naive") out.push_back(thr::MethodSpec::naive());
    else if (item == "oracle") out.push_back(thr::MethodSpec::oracle());
    else {
      ModelFlags copy = m;
      copy.classifier = item;
      out.push_back(thr::MethodSpec::learner(copy.spec(), cal));
    }
  }
  if (out.empty()) throw thr::ParameterError("--methods is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition-based bounds on the treatment harm rate"};
  app.set_config("--config", "", "TOML config file; keys mirror the long flags")->check(CLI::ExistingFile);
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string output;

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate bounds and confidence intervals from a trial CSV");
  std::string input, outcome_col = "y", arm_col = "a", covariate_cols;
  std::optional<double> favorable;
  ModelFlags est_model;
  std::size_t k = 2;
  double alpha = 0.05;
  std::size_t ci_draws = 10000;
  std::optional<std::uint64_t> ci_seed;
  std::size_t k_cal = 0;
  est->add_option("--input", input, "CSV with outcome, arm and covariate columns")->required()->check(CLI::ExistingFile);
  est->add_option("--outcome-col", outcome_col)->capture_default_str();
  est->add_option("--arm-col", arm_col)->capture_default_str();
  est->add_option("--covariate-cols", covariate_cols, "comma list or prefix glob like x*; default: all others");
  est->add_option("--favorable-value", favorable, "raw outcome value coded as favorable (+1)");
  add_model_flags(est, est_model);
  est->add_option("--k", k, "cross-fitting folds")->capture_default_str();
  est->add_option("--k-cal", k_cal, "calibration folds (0: same as --k)")->capture_default_str();
  est->add_option("--alpha", alpha, "interval level")->capture_default_str();
  est->add_option("--ci-draws", ci_draws, "Monte-Carlo draws for the intervals (0: none)")->capture_default_str();
  est->add_option("--ci-seed", ci_seed, "seed for interval draws (default: derived from --seed)");
  est->add_option("--seed", seed)->capture_default_str();
  est->add_option("--threads", threads, "workers (0: logical cores)")->capture_default_str();
  est->add_option("--output", output, "JSON result path (default: stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo experiment on the simulation design");
  int scenario = 1;
  std::size_t n = 500, reps = 200, theta_draws = 10000000, sim_k = 2, sim_ci_draws = 0;
  double sigma = 1, sim_alpha = 0.05;
  std::string methods = "naive,oracle", sweep, csv, intercept_mode = "index-only";
  ModelFlags sim_model;
  sim->add_option("--scenario", scenario)->capture_default_str()->check(CLI::IsMember({1, 2}));
  sim->add_option("--n", n, "sample size per replication")->capture_default_str();
  sim->add_option("--sigma", sigma, "outcome noise scale")->capture_default_str();
  sim->add_option("--reps", reps, "replications")->capture_default_str();
  sim->add_option("--methods", methods, "comma list of naive, oracle and classifier names")->capture_default_str();
  add_model_flags(sim, sim_model);
  sim->add_option("--k", sim_k, "cross-fitting folds")->capture_default_str();
  sim->add_option("--alpha", sim_alpha)->capture_default_str();
  sim->add_option("--ci-draws", sim_ci_draws, "interval draws per replication (0: none)")->capture_default_str();
  sim->add_option("--theta-draws", theta_draws, "integration draws for theta")->capture_default_str();
  sim->add_option("--intercept-mode", intercept_mode, "index-only or with-noise")->capture_default_str();
  sim->add_option("--sweep-sigma", sweep, "lo:hi:steps; emits per-sigma curves");
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--threads", threads, "workers (0: logical cores)")->capture_default_str();
  sim->add_option("--output", output, "JSON result path (default: stdout)");
  sim->add_option("--csv", csv, "metrics (or sweep curve) CSV path");

  // generate
  auto* gen = app.add_subcommand("generate", "Write one simulated trial as CSV");
  std::size_t gen_n = 500;
  int gen_scenario = 1;
  double gen_sigma = 1;
  gen->add_option("--scenario", gen_scenario)->capture_default_str()->check(CLI::IsMember({1, 2}));
  gen->add_option("--n", gen_n)->capture_default_str();
  gen->add_option("--sigma", gen_sigma)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--intercept-mode", intercept_mode)->capture_default_str();
  gen->add_option("--output", output, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << dump({{"error", {{"kind", "usage"}, {"message", e.what()}}}});
    return 64;
  }

  try {
    if (*est) {
      thr::CsvSchema schema;
      schema.outcome_col = outcome_col;
      schema.arm_col = arm_col;
      if (!covariate_cols.empty()) schema.covariate_cols = thr::parse_covariate_cols(covariate_cols);
      schema.favorable_value = favorable;
      const thr::Dataset data = thr::load_csv(input, schema);
      thr::CrossfitOptions o;
      o.k = k;
      o.classifier = est_model.spec();
      o.calibration = thr::parse_calibration_method(est_model.calibrate);
      if (k_cal > 0) o.k_cal = k_cal;
      o.alpha = alpha;
      o.ci_draws = ci_draws;
      o.seed = seed;
      o.ci_seed = ci_seed;
      o.threads = threads;
      write_text(output, dump(thr::to_json(thr::crossfit_estimate(data, o))));
    } else if (*sim) {
      thr::MonteCarloConfig c;
      c.scenario = scenario;
      c.n = n;
      c.sigma = sigma;
      c.reps = reps;
      c.methods = parse_methods(methods, sim_model);
      // --classifier on its own adds that learner to the method list
      if (sim->count("--classifier") > 0 && sim_model.classifier != "naive") {
        const auto extra = parse_methods(sim_model.classifier, sim_model).front();
        const bool listed = std::any_of(c.methods.begin(), c.methods.end(),
                                        [&](const thr::MethodSpec& m) { return m.label() == extra.label(); });
        if (!listed) c.methods.push_back(extra);
      }
      c.k = sim_k;
      c.alpha = sim_alpha;
      c.ci_draws = sim_ci_draws;
      c.seed = seed;
      c.threads = threads;
      c.theta_draws = theta_draws;
      c.scenario_options.mode = thr::parse_intercept_mode(intercept_mode);
      if (!sweep.empty()) {
        const auto sw = parse_sweep(sweep);
        const auto points = thr::sweep_sigma(c, sw.lo, sw.hi, sw.steps);
        thr::Json j = {{"config", thr::to_json(c)}, {"sweep", thr::to_json(points)}};
        j["config"].erase("sigma");
        if (!csv.empty()) write_text(csv, thr::sweep_csv(points));
        write_text(output, dump(j));
      } else {
        const auto r = thr::run_monte_carlo(c);
        if (!csv.empty()) write_text(csv, thr::metrics_csv(r));
        write_text(output, dump(thr::to_json(r)));
      }
    } else if (*gen) {
      thr::ScenarioOptions so;
      so.mode = thr::parse_intercept_mode(intercept_mode);
      const auto s = thr::make_scenario(gen_scenario, gen_sigma, so);
      thr::Rng rng = thr::make_rng(seed, {thr::stream::data});
      write_text(output, thr::to_csv(thr::generate(s, gen_n, rng).data));
    }
  } catch (const std::exception& e) {
    std::cerr << dump(thr::error_json(e));
    return dynamic_cast<const thr::Error*>(&e) ? 2 : 1;
  }
  return 0;
}
