#pragma once

// Probabilistic binary classifiers estimating P(Y = +1 | X = x). Every fitted
// model is immutable and may be shared across threads.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thr/dataset.hpp"
#include "thr/random.hpp"

namespace thr {

class ProbModel {
 public:
  virtual ~ProbModel() = default;
  virtual std::string_view kind() const = 0;
  /// Covariate dimension the model was trained on.
  virtual std::size_t dim() const = 0;
  /// Unchecked prediction; callers go through predict_proba().
  virtual double raw_predict(std::span<const double> x) const = 0;
  /// Hash of the fitted state. Two models with equal fingerprints predict
  /// identically.
  virtual std::uint64_t fingerprint() const = 0;
};

using ModelPtr = std::shared_ptr<const ProbModel>;

/// Checked prediction: dimension must match, output is clamped to [0,1].
double predict_proba(const ProbModel& model, std::span<const double> x);
std::vector<double> predict_proba(const ProbModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Logistic regression with ridge penalty

/// Penalized negative mean log-likelihood
///   f(b) = -(1/n) sum[y01 log s(x.b) + (1-y01) log(1-s(x.b))] + (ridge/2)|b|^2
/// where x carries a leading 1 when `intercept` is set.
class LogisticProblem {
 public:
  LogisticProblem(const Matrix& x, std::span<const int> labels, double ridge, bool intercept = true);

  std::size_t num_params() const noexcept { return x_.cols() + (intercept_ ? 1 : 0); }
  double value(std::span<const double> beta) const;
  std::vector<double> gradient(std::span<const double> beta) const;
  double linear_predictor(std::size_t i, std::span<const double> beta) const;

  const Matrix& x() const noexcept { return x_; }
  std::span<const int> labels() const noexcept { return labels_; }
  double ridge() const noexcept { return ridge_; }
  bool intercept() const noexcept { return intercept_; }

 private:
  const Matrix& x_;
  std::span<const int> labels_;
  double ridge_;
  bool intercept_;
};

struct NewtonOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;
};

/// Newton iteration with step halving. Throws ConvergenceError carrying the
/// final gradient norm when the iteration cap is hit.
std::vector<double> minimize_logistic(const LogisticProblem& problem, NewtonOptions opts = {});

class LogisticModel final : public ProbModel {
 public:
  LogisticModel(std::vector<double> coef, bool intercept, std::size_t dim)
      : coef_(std::move(coef)), intercept_(intercept), dim_(dim) {}
  std::string_view kind() const override { return "logistic"; }
  std::size_t dim() const override { return dim_; }
  double raw_predict(std::span<const double> x) const override;
  std::uint64_t fingerprint() const override;

  /// Intercept first when present.
  const std::vector<double>& coefficients() const noexcept { return coef_; }

 private:
  std::vector<double> coef_;
  bool intercept_;
  std::size_t dim_;
};

std::shared_ptr<const LogisticModel> fit_logistic(const Matrix& x, std::span<const int> labels,
                                                  double ridge = 1e-4, NewtonOptions opts = {});

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

class GaussianNbModel final : public ProbModel {
 public:
  struct ClassParams {
    double prior = 0;
    std::vector<double> mean;
    std::vector<double> var;
  };
  GaussianNbModel(ClassParams negative, ClassParams positive)
      : neg_(std::move(negative)), pos_(std::move(positive)) {}
  std::string_view kind() const override { return "gnb"; }
  std::size_t dim() const override { return pos_.mean.size(); }
  double raw_predict(std::span<const double> x) const override;
  std::uint64_t fingerprint() const override;

  const ClassParams& negative() const noexcept { return neg_; }
  const ClassParams& positive() const noexcept { return pos_; }

 private:
  ClassParams neg_, pos_;
};

/// Variances are floored at 1e-9 times the largest pooled per-coordinate
/// variance. Throws DegeneracyError when only one class is present.
std::shared_ptr<const GaussianNbModel> fit_gnb(const Matrix& x, std::span<const int> labels);

// ---------------------------------------------------------------------------
// K nearest neighbours

class KnnModel final : public ProbModel {
 public:
  KnnModel(Matrix x, std::vector<int> labels, std::vector<std::uint32_t> tie_rank, std::size_t k)
      : x_(std::move(x)), labels_(std::move(labels)), tie_rank_(std::move(tie_rank)), k_(k) {}
  std::string_view kind() const override { return "knn"; }
  std::size_t dim() const override { return x_.cols(); }
  double raw_predict(std::span<const double> x) const override;
  std::uint64_t fingerprint() const override;
  std::size_t k() const noexcept { return k_; }

 private:
  Matrix x_;
  std::vector<int> labels_;
  std::vector<std::uint32_t> tie_rank_;
  std::size_t k_;
};

inline std::size_t default_knn_k(std::size_t n_train) {
  std::size_t k = 1;
  while (k * k < n_train) ++k;
  return k;
}

/// Training rows are put in a canonical order and equidistant neighbours
/// are ranked by a seeded shuffle of that order, so predictions do not
/// depend on the input row order.
std::shared_ptr<const KnnModel> fit_knn(const Matrix& x, std::span<const int> labels,
                                        std::size_t k, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Random forest (CART, Gini impurity)

struct ForestConfig {
  int n_trees = 100;
  int min_leaf = 5;
  std::optional<int> max_depth;          // unset: unlimited
  std::optional<int> features_per_split; // unset: ceil(sqrt(p))
  bool bootstrap = true;
};

class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;  // fraction of +1 among the node's training rows
    std::size_t count = 0;
  };

  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}
  double predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
};

class ForestModel final : public ProbModel {
 public:
  ForestModel(std::vector<DecisionTree> trees, std::size_t dim)
      : trees_(std::move(trees)), dim_(dim) {}
  std::string_view kind() const override { return "forest"; }
  std::size_t dim() const override { return dim_; }
  double raw_predict(std::span<const double> x) const override;
  std::uint64_t fingerprint() const override;
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t dim_;
};

/// Each tree is grown on its own seeded substream, so the result is a pure
/// function of (data as a multiset, config, seed).
std::shared_ptr<const ForestModel> fit_forest(const Matrix& x, std::span<const int> labels,
                                              const ForestConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Wrapped functions (true simulation probabilities, constants in tests)

class FunctionModel final : public ProbModel {
 public:
  FunctionModel(std::function<double(std::span<const double>)> fn, std::size_t dim,
                std::string name)
      : fn_(std::move(fn)), dim_(dim), name_(std::move(name)) {}
  std::string_view kind() const override { return "function"; }
  std::size_t dim() const override { return dim_; }
  double raw_predict(std::span<const double> x) const override { return fn_(x); }
  std::uint64_t fingerprint() const override;

 private:
  std::function<double(std::span<const double>)> fn_;
  std::size_t dim_;
  std::string name_;
};

ModelPtr constant_model(double p, std::size_t dim);

// ---------------------------------------------------------------------------
// Classifier specs

enum class ClassifierKind { Naive, Logistic, GaussianNb, Knn, Forest };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::Forest;
  double ridge = 1e-4;
  std::optional<std::size_t> knn_k;  // unset: ceil(sqrt(n_train))
  ForestConfig forest;
};

/// Fits a model from training rows and a seed. Learners are how crossfit
/// and calibration stay agnostic of the classifier family.
using Learner = std::function<ModelPtr(const Matrix& x, std::span<const int> labels, Rng& rng)>;

/// Throws ParameterError for ClassifierKind::Naive, which fits nothing.
Learner make_learner(const ClassifierSpec& spec);

struct CvResult {
  double rate = 0;              // pooled out-of-fold error rate
  std::size_t evaluated = 0;    // rows scored
  std::size_t skipped_folds = 0;
  std::vector<std::string> warnings;
};

/// K-fold misclassification with threshold 0.5 (predict +1 iff p > 0.5).
/// Folds whose training part cannot be fitted (one class for a model that
/// needs two) are skipped and reported as warnings.
CvResult cv_misclassification(const Matrix& x, std::span<const int> labels, const Learner& learner,
                              std::size_t k, Rng& rng);

}  // namespace thr
