#include "thr/crossfit.hpp"

#include <algorithm>

#include "thr/error.hpp"
#include "thr/parallel.hpp"

namespace thr {

std::vector<CellSummary> summarize_cells(const CellStats& stats) {
  std::vector<CellSummary> out;
  for (std::size_t j = 0; j < stats.num_cells(); ++j) {
    CellSummary c;
    c.label = stats.labels[j].to_string();
    c.count = stats.count[j];
    c.share = stats.n ? static_cast<double>(stats.count[j]) / static_cast<double>(stats.n) : 0.0;
    c.n_control = stats.arm_count[j][0];
    c.n_treated = stats.arm_count[j][1];
    c.mu_control = stats.mu(0, j);
    c.mu_treated = stats.mu(1, j);
    out.push_back(std::move(c));
  }
  return out;
}

PartitionEstimate estimate_with_partition(const Dataset& data, const Partition& partition, double alpha,
                                          std::size_t ci_draws, std::uint64_t ci_seed, unsigned threads) {
  if (!(alpha > 0 && alpha < 1)) throw ParameterError("alpha must lie in (0,1)");
  const CellStats raw = cell_stats(data, partition);
  CellStats merged;
  PartitionEstimate pe;
  pe.bounds = estimate_bounds_merging(raw, &merged);
  pe.cells = summarize_cells(merged);
  if (ci_draws > 0) {
    SimulationOptions so;
    so.draws = ci_draws;
    so.seed = ci_seed;
    so.threads = threads;
    const auto dist = simulate_bound_distributions(merged, so);
    pe.ci = confidence_intervals(dist, pe.bounds, alpha);
    pe.ci_resampled = dist.resampled;
  }
  return pe;
}

namespace {

ModelPtr fit_one_arm(const Dataset& train, int arm, const CrossfitOptions& options, std::size_t fold,
                     std::vector<std::string>& warnings) {
  const auto rows = train.arm_indices(arm);
  const std::string who = std::string(arm == 1 ? "treated" : "control") + " model, fold " + std::to_string(fold);
  if (rows.empty()) throw DegeneracyError(who + ": no training rows in this arm");
  const Matrix x = train.covariates().select_rows(rows);
  std::vector<int> y(rows.size());
  std::size_t pos = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    y[r] = train.outcome(rows[r]);
    pos += y[r] == 1;
  }
  Learner learner = calibrated_learner(make_learner(options.classifier), options.calibration,
                                       options.k_cal.value_or(options.k));
  Rng rng = make_rng(options.seed, {stream::model, fold, static_cast<std::uint64_t>(arm)});
  try {
    return learner(x, y, rng);
  } catch (const DegeneracyError& e) {
    const double p = static_cast<double>(pos) / static_cast<double>(rows.size());
    warnings.push_back(who + ": " + e.what() + "; using the arm frequency " + std::to_string(p));
    return constant_model(p, train.dim());
  }
}

}  // namespace

ArmModels fit_arm_models(const Dataset& train, const CrossfitOptions& options, std::size_t fold) {
  ArmModels m;
  m.mu0 = fit_one_arm(train, 0, options, fold, m.warnings);
  m.mu1 = fit_one_arm(train, 1, options, fold, m.warnings);
  return m;
}

namespace {

Interval mean_interval(const std::vector<Interval>& v) {
  Interval out{0, 0};
  for (const auto& i : v) {
    out.lo += i.lo;
    out.hi += i.hi;
  }
  out.lo /= static_cast<double>(v.size());
  out.hi /= static_cast<double>(v.size());
  return out;
}

BoundsEstimate mean_bounds(const std::vector<const BoundsEstimate*>& v) {
  BoundsEstimate b;
  b.lower = b.upper = 0;
  for (const auto* e : v) {
    b.lower += e->lower;
    b.upper += e->upper;
  }
  b.lower /= static_cast<double>(v.size());
  b.upper /= static_cast<double>(v.size());
  b.upper = std::max(b.upper, b.lower);
  b.information = 1.0 + b.lower - b.upper;
  return b;
}

}  // namespace

CrossfitAggregate aggregate_folds(const std::vector<FoldResult>& folds) {
  if (folds.empty()) throw ParameterError("aggregate_folds: no folds");
  CrossfitAggregate agg;
  std::vector<const BoundsEstimate*> parts, plugs;
  for (const auto& f : folds) {
    parts.push_back(&f.estimate.bounds);
    if (f.plug_in) plugs.push_back(&*f.plug_in);
  }
  agg.bounds = mean_bounds(parts);
  for (const auto& f : folds) {
    for (const auto& m : f.estimate.bounds.merged_cells) {
      agg.bounds.merged_cells.push_back({"fold " + std::to_string(f.fold) + " " + m.from, m.into});
    }
  }
  if (plugs.size() == folds.size()) agg.plug_in = mean_bounds(plugs);

  if (std::all_of(folds.begin(), folds.end(), [](const FoldResult& f) { return f.estimate.ci.has_value(); })) {
    std::vector<Interval> l, u, e;
    for (const auto& f : folds) {
      l.push_back(f.estimate.ci->lower_bound);
      u.push_back(f.estimate.ci->upper_bound);
      e.push_back(f.estimate.ci->extended);
    }
    IntervalSet s;
    s.alpha = folds.front().estimate.ci->alpha;
    s.lower_bound = mean_interval(l);
    s.upper_bound = mean_interval(u);
    s.extended = mean_interval(e);
    agg.ci = s;
  }

  std::array<std::size_t, 2> err{0, 0}, cnt{0, 0};
  for (const auto& f : folds) {
    for (int a = 0; a < 2; ++a) {
      err[a] += f.eval_errors[a];
      cnt[a] += f.eval_arm_n[a];
    }
  }
  if (cnt[1] > 0) agg.tmcr = static_cast<double>(err[1]) / static_cast<double>(cnt[1]);
  if (cnt[0] > 0) agg.cmcr = static_cast<double>(err[0]) / static_cast<double>(cnt[0]);
  return agg;
}

CrossfitResult crossfit_estimate(const Dataset& data, const CrossfitOptions& options) {
  if (!(options.alpha > 0 && options.alpha < 1)) throw ParameterError("alpha must lie in (0,1)");
  data.require_both_arms();
  CrossfitResult res;
  res.n = data.size();
  res.options = options;
  const std::uint64_t ci_base = options.ci_seed.value_or(derive_seed(options.seed, {stream::ci}));

  if (options.classifier.kind == ClassifierKind::Naive) {
    FoldResult f;
    f.n_eval = data.size();
    f.estimate = estimate_with_partition(data, naive_partition(), options.alpha, options.ci_draws,
                                         derive_seed(ci_base, {0}), options.threads);
    res.folds.push_back(std::move(f));
    res.aggregate = aggregate_folds(res.folds);
    return res;
  }

  if (options.k < 2) throw ParameterError("cross-fitting needs K >= 2 (got " + std::to_string(options.k) + ")");
  if (options.k > data.size()) throw ParameterError("cross-fitting: K exceeds the sample size");
  Rng fold_rng = make_rng(options.seed, {stream::folds});
  const FoldAssignment folds = split_folds(data, options.k, fold_rng);

  const unsigned threads = options.threads == 0 ? default_threads() : options.threads;
  const unsigned fold_threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.k));
  const unsigned inner_threads = std::max(1u, threads / std::max(1u, fold_threads));

  res.folds.resize(options.k);
  parallel_for(options.k, fold_threads, [&](std::size_t f) {
    FoldResult& fr = res.folds[f];
    fr.fold = f;
    const auto train_idx = folds.complement(f);
    const auto eval_idx = folds.members(f);
    const Dataset train = data.subset(train_idx);
    const Dataset eval = data.subset(eval_idx);
    fr.n_train = train.size();
    fr.n_eval = eval.size();

    ArmModels models = fit_arm_models(train, options, f);
    fr.warnings = std::move(models.warnings);
    fr.mu0_fingerprint = models.mu0->fingerprint();
    fr.mu1_fingerprint = models.mu1->fingerprint();

    const Partition part = plug_in_partition(models.mu0, models.mu1, derive_seed(options.seed, {stream::ties, f}));
    fr.estimate = estimate_with_partition(eval, part, options.alpha, options.ci_draws,
                                          derive_seed(ci_base, {f}), inner_threads);
    for (const auto& m : fr.estimate.bounds.merged_cells) {
      fr.warnings.push_back("fold " + std::to_string(f) + ": merged degenerate cell " + m.from + " into " + m.into);
    }
    if (options.plug_in) fr.plug_in = plug_in_bounds(*models.mu0, *models.mu1, eval);

    for (std::size_t i = 0; i < eval.size(); ++i) {
      const int a = eval.arm(i);
      const double p = predict_proba(a == 1 ? *models.mu1 : *models.mu0, eval.x(i));
      const int pred = p > 0.5 ? 1 : -1;
      ++fr.eval_arm_n[a];
      if (pred != eval.outcome(i)) ++fr.eval_errors[a];
    }
  });

  for (const auto& f : res.folds) res.warnings.insert(res.warnings.end(), f.warnings.begin(), f.warnings.end());
  res.aggregate = aggregate_folds(res.folds);
  return res;
}

}  // namespace thr
