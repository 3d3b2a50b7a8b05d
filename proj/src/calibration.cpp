#include "thr/calibration.hpp"

#include <algorithm>
#include <numeric>

#include "thr/error.hpp"
#include "thr/numeric.hpp"

namespace thr {

StepCalibrator::StepCalibrator(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw ParameterError("StepCalibrator: breakpoints and values must be nonempty and equal length");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i - 1] < breakpoints_[i])) {
      throw InvariantError("StepCalibrator: breakpoints must be strictly ascending");
    }
    if (values_[i - 1] > values_[i]) throw InvariantError("StepCalibrator: values must be nondecreasing");
  }
}

double StepCalibrator::operator()(double score) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), score);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double SigmoidCalibrator::operator()(double score) const { return sigmoid(slope * score + offset); }

namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels01, const char* who) {
  if (scores.size() != labels01.size()) {
    throw ShapeError(std::string(who) + ": scores and labels differ in length");
  }
  if (scores.empty()) throw ParameterError(std::string(who) + ": empty input");
  for (int y : labels01) {
    if (y != 0 && y != 1) throw EncodingError(std::string(who) + ": labels must be 0/1");
  }
}

struct Block {
  double first_score;
  double sum;
  double weight;
  std::size_t begin;  // range in sorted order
  std::size_t end;
  double mean() const { return sum / weight; }
};

std::vector<Block> pav_blocks(std::span<const double> scores, std::span<const int> labels01,
                              std::vector<std::size_t>& order) {
  order.resize(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<Block> stack;
  std::size_t i = 0;
  while (i < order.size()) {
    // Initial block: all rows sharing one score.
    Block b{scores[order[i]], 0.0, 0.0, i, i};
    while (i < order.size() && scores[order[i]] == b.first_score) {
      b.sum += labels01[order[i]];
      b.weight += 1;
      ++i;
    }
    b.end = i;
    stack.push_back(b);
    while (stack.size() > 1 && stack[stack.size() - 2].mean() > stack.back().mean()) {
      Block top = stack.back();
      stack.pop_back();
      auto& prev = stack.back();
      prev.sum += top.sum;
      prev.weight += top.weight;
      prev.end = top.end;
    }
  }
  return stack;
}

}  // namespace

std::vector<double> isotonic_fit_values(std::span<const double> scores, std::span<const int> labels01) {
  check_binary(scores, labels01, "isotonic_fit_values");
  std::vector<std::size_t> order;
  const auto blocks = pav_blocks(scores, labels01, order);
  std::vector<double> out(scores.size());
  for (const auto& b : blocks) {
    for (std::size_t r = b.begin; r < b.end; ++r) out[order[r]] = b.mean();
  }
  return out;
}

StepCalibrator pav_fit(std::span<const double> scores, std::span<const int> labels01) {
  check_binary(scores, labels01, "pav_fit");
  std::vector<std::size_t> order;
  const auto blocks = pav_blocks(scores, labels01, order);
  std::vector<double> bp, val;
  bp.reserve(blocks.size());
  val.reserve(blocks.size());
  for (const auto& b : blocks) {
    bp.push_back(b.first_score);
    val.push_back(std::clamp(b.mean(), 0.0, 1.0));
  }
  return StepCalibrator(std::move(bp), std::move(val));
}

SigmoidCalibrator platt_fit(std::span<const double> scores, std::span<const int> labels01) {
  check_binary(scores, labels01, "platt_fit");
  const auto pos = std::count(labels01.begin(), labels01.end(), 1);
  if (pos == 0 || static_cast<std::size_t>(pos) == labels01.size()) {
    throw DegeneracyError("platt_fit: both classes must be present");
  }
  Matrix x(std::vector<double>(scores.begin(), scores.end()), 1);
  std::vector<int> pm(labels01.size());
  std::transform(labels01.begin(), labels01.end(), pm.begin(), [](int y) { return y == 1 ? 1 : -1; });
  // A vanishing ridge keeps the Hessian invertible when all scores coincide.
  LogisticProblem problem(x, pm, 1e-10, true);
  const auto beta = minimize_logistic(problem, NewtonOptions{200, 1e-9});
  return {beta[1], beta[0]};
}

std::string_view to_string(CalibrationMethod m) {
  switch (m) {
    case CalibrationMethod::None: return "none";
    case CalibrationMethod::Isotonic: return "isotonic";
    case CalibrationMethod::Platt: return "platt";
  }
  return "?";
}

CalibrationMethod parse_calibration_method(std::string_view name) {
  if (name == "none") return CalibrationMethod::None;
  if (name == "isotonic") return CalibrationMethod::Isotonic;
  if (name == "platt") return CalibrationMethod::Platt;
  throw ParameterError("unknown calibration method '" + std::string(name) + "'");
}

CalibratedModel::CalibratedModel(std::vector<Member> members) : members_(std::move(members)) {
  if (members_.empty()) throw ParameterError("CalibratedModel: no members");
}

double CalibratedModel::raw_predict(std::span<const double> x) const {
  double s = 0;
  for (const auto& m : members_) {
    const double score = predict_proba(*m.base, x);
    s += std::visit([score](const auto& c) { return c(score); }, m.calibrator);
  }
  return std::clamp(s / static_cast<double>(members_.size()), 0.0, 1.0);
}

std::uint64_t CalibratedModel::fingerprint() const {
  Fnv1a h;
  h.add_bytes("calibrated", 10);
  for (const auto& m : members_) {
    h.add(m.base->fingerprint());
    if (const auto* step = std::get_if<StepCalibrator>(&m.calibrator)) {
      h.add(std::span<const double>(step->breakpoints())).add(std::span<const double>(step->values()));
    } else {
      const auto& sig = std::get<SigmoidCalibrator>(m.calibrator);
      h.add(sig.slope).add(sig.offset);
    }
  }
  return h.value();
}

ModelPtr calibrate_cv(const Matrix& x, std::span<const int> labels, const Learner& base,
                      CalibrationMethod method, std::size_t k_cal, Rng& rng,
                      CalibrationReport* report) {
  if (labels.size() != x.rows()) throw ShapeError("calibrate_cv: rows and labels differ");
  if (k_cal < 2) throw ParameterError("calibrate_cv: need at least 2 calibration folds");
  if (labels.size() < 2 * k_cal) {
    throw ParameterError("calibrate_cv: need at least 2*K_cal rows (n=" + std::to_string(labels.size()) +
                         ", K_cal=" + std::to_string(k_cal) + ")");
  }
  if (method == CalibrationMethod::None) return base(x, labels, rng);

  const auto folds = split_folds(labels.size(), k_cal, rng);
  std::vector<CalibratedModel::Member> members;
  for (std::size_t f = 0; f < k_cal; ++f) {
    const auto train = folds.complement(f);
    const auto hold = folds.members(f);
    std::vector<int> yt(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) yt[r] = labels[train[r]];
    Rng fold_rng(rng());
    try {
      ModelPtr model = base(x.select_rows(train), yt, fold_rng);
      std::vector<double> scores(hold.size());
      std::vector<int> y01(hold.size());
      for (std::size_t r = 0; r < hold.size(); ++r) {
        scores[r] = predict_proba(*model, x.row(hold[r]));
        y01[r] = labels[hold[r]] == 1 ? 1 : 0;
      }
      if (method == CalibrationMethod::Isotonic) {
        members.push_back({model, pav_fit(scores, y01)});
      } else {
        members.push_back({model, platt_fit(scores, y01)});
      }
    } catch (const DegeneracyError& e) {
      if (report) {
        ++report->skipped_folds;
        report->warnings.push_back("calibration fold " + std::to_string(f) + " skipped: " + e.what());
      }
    }
  }
  if (members.empty()) throw DegeneracyError("calibrate_cv: every calibration fold was degenerate");
  return std::make_shared<CalibratedModel>(std::move(members));
}

Learner calibrated_learner(Learner base, CalibrationMethod method, std::size_t k_cal) {
  if (method == CalibrationMethod::None) return base;
  return [base = std::move(base), method, k_cal](const Matrix& x, std::span<const int> y, Rng& rng) {
    return calibrate_cv(x, y, base, method, k_cal, rng);
  };
}

}  // namespace thr
