#include "thr/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "thr/error.hpp"

namespace thr {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Json to_json(const BoundsEstimate& b) {
  Json merged = Json::array();
  for (const auto& m : b.merged_cells) merged.push_back({{"from", m.from}, {"into", m.into}});
  return {{"lower", b.lower}, {"upper", b.upper}, {"information", b.information}, {"merged_cells", merged}};
}

Json to_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Json to_json(const IntervalSet& s) {
  return {{"alpha", s.alpha},
          {"lower_bound", to_json(s.lower_bound)},
          {"upper_bound", to_json(s.upper_bound)},
          {"extended", to_json(s.extended)}};
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

template <typename T>
Json opt_json(const std::optional<T>& v) {
  return v ? to_json(*v) : Json(nullptr);
}

}  // namespace

Json to_json(const CellSummary& c) {
  return {{"label", c.label},         {"count", c.count},         {"share", c.share},
          {"n_control", c.n_control}, {"n_treated", c.n_treated}, {"mu_control", opt(c.mu_control)},
          {"mu_treated", opt(c.mu_treated)}};
}

Json to_json(const CrossfitOptions& o) {
  Json j = {{"classifier", std::string(to_string(o.classifier.kind))},
            {"calibration", std::string(to_string(o.calibration))},
            {"k", o.k},
            {"alpha", o.alpha},
            {"ci_draws", o.ci_draws},
            {"seed", o.seed}};
  j["ci_seed"] = o.ci_seed ? Json(*o.ci_seed) : Json(nullptr);
  return j;
}

Json to_json(const CrossfitResult& r) {
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    Json cells = Json::array();
    for (const auto& c : f.estimate.cells) cells.push_back(to_json(c));
    Json jf = {{"fold", f.fold},
               {"n_train", f.n_train},
               {"n_eval", f.n_eval},
               {"bounds", to_json(f.estimate.bounds)},
               {"plug_in", opt_json(f.plug_in)},
               {"ci", opt_json(f.estimate.ci)},
               {"ci_resampled", f.estimate.ci_resampled},
               {"cells", cells},
               {"warnings", f.warnings}};
    folds.push_back(std::move(jf));
  }
  Json agg = {{"bounds", to_json(r.aggregate.bounds)},
              {"plug_in", opt_json(r.aggregate.plug_in)},
              {"ci", opt_json(r.aggregate.ci)},
              {"tmcr", opt(r.aggregate.tmcr)},
              {"cmcr", opt(r.aggregate.cmcr)}};
  return {{"n", r.n},
          {"options", to_json(r.options)},
          {"lower", r.aggregate.bounds.lower},
          {"upper", r.aggregate.bounds.upper},
          {"extended_ci", r.aggregate.ci ? to_json(r.aggregate.ci->extended) : Json(nullptr)},
          {"aggregate", agg},
          {"folds", folds},
          {"warnings", r.warnings}};
}

Json to_json(const MetricsRow& r) {
  return {{"method", r.method},
          {"estimator", r.estimator},
          {"theta", r.theta},
          {"mean_lower", r.mean_lower},
          {"mean_upper", r.mean_upper},
          {"bias", r.bias},
          {"width", r.width},
          {"covr", r.covr},
          {"tmcr", opt(r.tmcr)},
          {"cmcr", opt(r.cmcr)},
          {"lcovr", opt(r.lcovr)},
          {"ucovr", opt(r.ucovr)},
          {"ecovr", opt(r.ecovr)},
          {"mean_ci_lower", opt_json(r.mean_ci_lower)},
          {"mean_ci_upper", opt_json(r.mean_ci_upper)},
          {"mean_ci_extended", opt_json(r.mean_ci_extended)},
          {"reps", r.reps},
          {"failed", r.failed},
          {"flagged", r.flagged},
          {"failures", r.failures}};
}

Json to_json(const PopulationSummary& p) {
  return {{"theta", p.theta}, {"theta_se", p.theta_se}, {"p0", p.p0},           {"p1", p.p1},
          {"naive", to_json(p.naive)}, {"sharp", to_json(p.sharp)}, {"draws", p.draws}};
}

Json to_json(const MonteCarloConfig& c) {
  Json methods = Json::array();
  for (const auto& m : c.methods) methods.push_back(m.label());
  return {{"scenario", c.scenario},
          {"n", c.n},
          {"sigma", c.sigma},
          {"reps", c.reps},
          {"methods", methods},
          {"k", c.k},
          {"alpha", c.alpha},
          {"ci_draws", c.ci_draws},
          {"seed", c.seed},
          {"intercept_mode", std::string(to_string(c.scenario_options.mode))},
          {"theta_draws", c.theta_draws}};
}

Json to_json(const MonteCarloResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row));
  return {{"config", to_json(r.config)},
          {"intercepts", Json::array({r.scenario.c0, r.scenario.c1})},
          {"population", to_json(r.population)},
          {"rows", rows}};
}

Json to_json(const std::vector<SweepPoint>& sweep) {
  Json out = Json::array();
  for (const auto& p : sweep) {
    Json rows = Json::array();
    for (const auto& row : p.rows) rows.push_back(to_json(row));
    out.push_back({{"sigma", p.sigma}, {"theta", p.theta}, {"rows", rows}});
  }
  return out;
}

Json error_json(const std::exception& e) {
  Json err = {{"kind", "internal"}, {"message", e.what()}};
  if (const auto* te = dynamic_cast<const Error*>(&e)) {
    err["kind"] = te->kind();
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) err["row"] = pe->row();
    if (const auto* de = dynamic_cast<const DegenerateCellError*>(&e)) {
      err["cell"] = de->cell();
      err["label"] = de->label();
    }
    if (const auto* ce = dynamic_cast<const ConvergenceError*>(&e)) err["gradient_norm"] = ce->gradient_norm();
  }
  return {{"error", err}};
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string metrics_csv(const MonteCarloResult& r) {
  std::ostringstream os;
  os << "method,estimator,theta,lower,upper,bias,width,covr,tmcr,cmcr,lcovr,ucovr,ecovr,"
        "ci_lower_lo,ci_lower_hi,ci_upper_lo,ci_upper_hi,ci_extended_lo,ci_extended_hi,reps,failed,flagged\n";
  for (const auto& row : r.rows) {
    os << row.method << ',' << row.estimator << ',' << format_double(row.theta) << ','
       << format_double(row.mean_lower) << ',' << format_double(row.mean_upper) << ',' << format_double(row.bias)
       << ',' << format_double(row.width) << ',' << format_double(row.covr) << ',' << cell(row.tmcr) << ','
       << cell(row.cmcr) << ',' << cell(row.lcovr) << ',' << cell(row.ucovr) << ',' << cell(row.ecovr);
    for (const auto* iv : {&row.mean_ci_lower, &row.mean_ci_upper, &row.mean_ci_extended}) {
      if (*iv) os << ',' << format_double((*iv)->lo) << ',' << format_double((*iv)->hi);
      else os << ",,";
    }
    os << ',' << row.reps << ',' << row.failed << ',' << (row.flagged ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& sweep) {
  std::ostringstream os;
  if (sweep.empty()) return "sigma,theta\n";
  os << "sigma,theta";
  for (const auto& row : sweep.front().rows) {
    std::string tag = row.method == "naive" || row.method == "oracle" ? row.method
                      : row.estimator == "plug-in"                    ? "plugin_" + row.method
                                                                      : "partition_" + row.method;
    for (char& ch : tag)
      if (ch == '+' || ch == '-') ch = '_';
    os << ',' << tag << "_lower," << tag << "_upper," << tag << "_band_lo," << tag << "_band_hi";
  }
  os << '\n';
  for (const auto& p : sweep) {
    os << format_double(p.sigma) << ',' << format_double(p.theta);
    for (const auto& row : p.rows) {
      os << ',' << format_double(row.mean_lower) << ',' << format_double(row.mean_upper);
      if (row.mean_ci_extended) {
        os << ',' << format_double(row.mean_ci_extended->lo) << ',' << format_double(row.mean_ci_extended->hi);
      } else {
        os << ",,";
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace thr
