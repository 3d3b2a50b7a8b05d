#pragma once

// Monotone recalibration of classifier scores: isotonic regression via
// pool-adjacent-violators, and Platt (sigmoid) scaling. calibrate_cv wraps
// both in an internal cross-fitting ensemble.

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "thr/classifiers.hpp"

namespace thr {

/// Right-continuous step function: value[i] applies on
/// [breakpoints[i], breakpoints[i+1]); queries outside the fitted range
/// clamp to the first/last level.
class StepCalibrator {
 public:
  StepCalibrator(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double score) const;
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

struct SigmoidCalibrator {
  double slope = 0;
  double offset = 0;
  double operator()(double score) const;
};

/// Solution of min sum (y_i - w_i)^2 subject to w nondecreasing in score,
/// evaluated at each input (original order). Ties in score share one level.
std::vector<double> isotonic_fit_values(std::span<const double> scores, std::span<const int> labels01);

/// PAV isotonic regression. Labels are 0/1. Equal scores are pooled into one
/// block before the violator passes.
StepCalibrator pav_fit(std::span<const double> scores, std::span<const int> labels01);

/// Maximum-likelihood sigmoid(slope * score + offset) using the logistic
/// Newton solver. Labels are 0/1; both classes must be present.
SigmoidCalibrator platt_fit(std::span<const double> scores, std::span<const int> labels01);

enum class CalibrationMethod { None, Isotonic, Platt };

std::string_view to_string(CalibrationMethod m);
CalibrationMethod parse_calibration_method(std::string_view name);

/// Ensemble of (base model, calibrator) pairs; predicts the mean of
/// calibrator(base(x)) over members, clipped to [0,1].
class CalibratedModel final : public ProbModel {
 public:
  struct Member {
    ModelPtr base;
    std::variant<StepCalibrator, SigmoidCalibrator> calibrator;
  };
  explicit CalibratedModel(std::vector<Member> members);

  std::string_view kind() const override { return "calibrated"; }
  std::size_t dim() const override { return members_.front().base->dim(); }
  double raw_predict(std::span<const double> x) const override;
  std::uint64_t fingerprint() const override;
  const std::vector<Member>& members() const noexcept { return members_; }

 private:
  std::vector<Member> members_;
};

struct CalibrationReport {
  std::size_t skipped_folds = 0;
  std::vector<std::string> warnings;
};

/// For each of k_cal folds: fit the base learner on the other folds, fit the
/// calibrator on the base model's scores for the held-out fold. Folds whose
/// base fit is degenerate are skipped (reported); if every fold is skipped,
/// DegeneracyError is thrown. Requires n >= 2 * k_cal.
ModelPtr calibrate_cv(const Matrix& x, std::span<const int> labels, const Learner& base,
                      CalibrationMethod method, std::size_t k_cal, Rng& rng,
                      CalibrationReport* report = nullptr);

/// Learner that wraps `base` with calibrate_cv (identity when method is None).
Learner calibrated_learner(Learner base, CalibrationMethod method, std::size_t k_cal);

}  // namespace thr
