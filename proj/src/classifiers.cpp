#include "thr/classifiers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "thr/error.hpp"
#include "thr/numeric.hpp"

namespace thr {

double predict_proba(const ProbModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ShapeError("predict_proba: expected " + std::to_string(model.dim()) +
                     " covariates, got " + std::to_string(x.size()));
  }
  const double p = model.raw_predict(x);
  if (std::isnan(p)) throw InvariantError("predict_proba: model returned NaN");
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> predict_proba(const ProbModel& model, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(model, x.row(i));
  return out;
}

namespace {

void check_labels(const Matrix& x, std::span<const int> labels, const char* who) {
  if (x.rows() != labels.size()) {
    throw ShapeError(std::string(who) + ": feature rows and label count differ");
  }
  if (labels.empty()) throw ParameterError(std::string(who) + ": empty training set");
  for (int y : labels) {
    if (y != 1 && y != -1) throw EncodingError(std::string(who) + ": labels must be -1/+1");
  }
}

std::size_t count_positive(std::span<const int> labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Logistic

LogisticProblem::LogisticProblem(const Matrix& x, std::span<const int> labels, double ridge,
                                 bool intercept)
    : x_(x), labels_(labels), ridge_(ridge), intercept_(intercept) {
  if (ridge < 0) throw ParameterError("logistic: ridge penalty must be >= 0");
}

double LogisticProblem::linear_predictor(std::size_t i, std::span<const double> beta) const {
  double t = 0;
  std::size_t off = 0;
  if (intercept_) {
    t = beta[0];
    off = 1;
  }
  auto row = x_.row(i);
  for (std::size_t j = 0; j < row.size(); ++j) t += beta[off + j] * row[j];
  return t;
}

double LogisticProblem::value(std::span<const double> beta) const {
  double nll = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double t = linear_predictor(i, beta);
    // -log s(t) = log(1+e^-t); -log(1-s(t)) = log(1+e^t)
    const double z = labels_[i] == 1 ? -t : t;
    nll += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  double pen = 0;
  for (double b : beta) pen += b * b;
  return nll / static_cast<double>(labels_.size()) + 0.5 * ridge_ * pen;
}

std::vector<double> LogisticProblem::gradient(std::span<const double> beta) const {
  const std::size_t m = num_params();
  std::vector<double> g(m, 0.0);
  const double inv_n = 1.0 / static_cast<double>(labels_.size());
  const std::size_t off = intercept_ ? 1 : 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double r = (sigmoid(linear_predictor(i, beta)) - (labels_[i] == 1 ? 1.0 : 0.0)) * inv_n;
    if (intercept_) g[0] += r;
    auto row = x_.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) g[off + j] += r * row[j];
  }
  for (std::size_t j = 0; j < m; ++j) g[j] += ridge_ * beta[j];
  return g;
}

std::vector<double> minimize_logistic(const LogisticProblem& problem, NewtonOptions opts) {
  const std::size_t m = problem.num_params();
  const std::size_t n = problem.labels().size();
  const std::size_t off = problem.intercept() ? 1 : 0;
  std::vector<double> beta(m, 0.0);
  double f = problem.value(beta);
  double gnorm = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const auto g = problem.gradient(beta);
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(m));
    gnorm = gv.norm();
    if (gnorm <= opts.grad_tol) return beta;

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigmoid(problem.linear_predictor(i, beta));
      if (problem.intercept()) xi[0] = 1.0;
      auto row = problem.x().row(i);
      for (std::size_t j = 0; j < row.size(); ++j) xi[static_cast<Eigen::Index>(off + j)] = row[j];
      h.selfadjointView<Eigen::Lower>().rankUpdate(xi, s * (1 - s));
    }
    h = h.selfadjointView<Eigen::Lower>();
    h /= static_cast<double>(n);
    h.diagonal().array() += problem.ridge();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(gv);
    if (step.size() == 0 || !step.allFinite()) step = gv;  // fall back to steepest descent

    double t = 1.0;
    std::vector<double> trial(m);
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t j = 0; j < m; ++j) trial[j] = beta[j] - t * step[static_cast<Eigen::Index>(j)];
      const double ft = problem.value(trial);
      if (ft <= f) {
        improved = ft < f || t < 1.0;
        beta = trial;
        f = ft;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      // No decrease possible at machine precision; accept if gradient is small.
      const auto g2 = problem.gradient(beta);
      gnorm = Eigen::Map<const Eigen::VectorXd>(g2.data(), static_cast<Eigen::Index>(m)).norm();
      if (gnorm <= std::max(opts.grad_tol, 1e-7)) return beta;
    }
  }
  const auto g = problem.gradient(beta);
  gnorm = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(m)).norm();
  if (gnorm <= opts.grad_tol) return beta;
  throw ConvergenceError("logistic fit did not converge (gradient norm " + std::to_string(gnorm) + ")",
                         gnorm);
}

double LogisticModel::raw_predict(std::span<const double> x) const {
  double t = 0;
  std::size_t off = 0;
  if (intercept_) {
    t = coef_[0];
    off = 1;
  }
  for (std::size_t j = 0; j < x.size(); ++j) t += coef_[off + j] * x[j];
  return sigmoid(t);
}

std::uint64_t LogisticModel::fingerprint() const {
  return Fnv1a().add_bytes("logistic", 8).add(std::span<const double>(coef_)).add(intercept_).value();
}

std::shared_ptr<const LogisticModel> fit_logistic(const Matrix& x, std::span<const int> labels,
                                                  double ridge, NewtonOptions opts) {
  check_labels(x, labels, "fit_logistic");
  const std::size_t pos = count_positive(labels);
  if (ridge == 0 && (pos == 0 || pos == labels.size())) {
    throw DegeneracyError("fit_logistic: a single label class requires a positive ridge penalty");
  }
  LogisticProblem problem(x, labels, ridge, true);
  auto beta = minimize_logistic(problem, opts);
  return std::make_shared<LogisticModel>(std::move(beta), true, x.cols());
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

double GaussianNbModel::raw_predict(std::span<const double> x) const {
  auto log_joint = [&](const ClassParams& c) {
    double l = std::log(c.prior);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - c.mean[j];
      l -= 0.5 * std::log(2 * M_PI * c.var[j]) + d * d / (2 * c.var[j]);
    }
    return l;
  };
  return sigmoid(log_joint(pos_) - log_joint(neg_));
}

std::uint64_t GaussianNbModel::fingerprint() const {
  Fnv1a h;
  h.add_bytes("gnb", 3);
  for (const auto* c : {&neg_, &pos_}) {
    h.add(c->prior).add(std::span<const double>(c->mean)).add(std::span<const double>(c->var));
  }
  return h.value();
}

std::shared_ptr<const GaussianNbModel> fit_gnb(const Matrix& x, std::span<const int> labels) {
  check_labels(x, labels, "fit_gnb");
  const std::size_t n = labels.size();
  const std::size_t p = x.cols();
  const std::size_t pos = count_positive(labels);
  if (pos == 0 || pos == n) {
    throw DegeneracyError("fit_gnb: both classes must be present to estimate priors");
  }

  double max_var = 0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double v = 0;
    for (std::size_t i = 0; i < n; ++i) v += (x(i, j) - mean) * (x(i, j) - mean);
    max_var = std::max(max_var, v / static_cast<double>(n));
  }
  const double floor = max_var > 0 ? 1e-9 * max_var : 1e-9;

  auto fit_class = [&](int label) {
    GaussianNbModel::ClassParams c;
    c.mean.assign(p, 0.0);
    c.var.assign(p, 0.0);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != label) continue;
      ++cnt;
      for (std::size_t j = 0; j < p; ++j) c.mean[j] += x(i, j);
    }
    for (auto& m : c.mean) m /= static_cast<double>(cnt);
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != label) continue;
      for (std::size_t j = 0; j < p; ++j) c.var[j] += (x(i, j) - c.mean[j]) * (x(i, j) - c.mean[j]);
    }
    for (auto& v : c.var) v = std::max(v / static_cast<double>(cnt), floor);
    c.prior = static_cast<double>(cnt) / static_cast<double>(n);
    return c;
  };
  return std::make_shared<GaussianNbModel>(fit_class(-1), fit_class(1));
}

// ---------------------------------------------------------------------------
// KNN

namespace {

/// Row order by (covariates lexicographically, label); makes fitting
/// invariant to permutations of the training rows.
std::vector<std::size_t> canonical_order(const Matrix& x, std::span<const int> labels) {
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    auto ra = x.row(a), rb = x.row(b);
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (ra[j] != rb[j]) return ra[j] < rb[j];
    }
    return labels[a] < labels[b];
  });
  return idx;
}

}  // namespace

double KnnModel::raw_predict(std::span<const double> x) const {
  const std::size_t n = labels_.size();
  struct Cand {
    double d2;
    std::uint32_t rank;
    int label;
  };
  std::vector<Cand> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x_.row(i);
    double d2 = 0;
    for (std::size_t j = 0; j < r.size(); ++j) d2 += (r[j] - x[j]) * (r[j] - x[j]);
    c[i] = {d2, tie_rank_[i], labels_[i]};
  }
  auto less = [](const Cand& a, const Cand& b) {
    return a.d2 != b.d2 ? a.d2 < b.d2 : a.rank < b.rank;
  };
  if (k_ < n) std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k_), c.end(), less);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k_; ++i) pos += c[i].label == 1;
  return static_cast<double>(pos) / static_cast<double>(k_);
}

std::uint64_t KnnModel::fingerprint() const {
  Fnv1a h;
  h.add_bytes("knn", 3).add(k_).add(std::span<const double>(x_.values()));
  for (int y : labels_) h.add(y);
  for (auto r : tie_rank_) h.add(r);
  return h.value();
}

std::shared_ptr<const KnnModel> fit_knn(const Matrix& x, std::span<const int> labels, std::size_t k,
                                        std::uint64_t seed) {
  check_labels(x, labels, "fit_knn");
  if (k < 1 || k > labels.size()) {
    throw ParameterError("fit_knn: k must satisfy 1 <= k <= n_train (k=" + std::to_string(k) +
                         ", n=" + std::to_string(labels.size()) + ")");
  }
  const auto order = canonical_order(x, labels);
  std::vector<int> y(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) y[r] = labels[order[r]];
  std::vector<std::uint32_t> rank(order.size());
  std::iota(rank.begin(), rank.end(), 0u);
  Rng rng(derive_seed(seed, {stream::ties}));
  std::shuffle(rank.begin(), rank.end(), rng);
  return std::make_shared<KnnModel>(x.select_rows(order), std::move(y), std::move(rank), k);
}

// ---------------------------------------------------------------------------
// Forest

double DecisionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double ForestModel::raw_predict(std::span<const double> x) const {
  double s = 0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

std::uint64_t ForestModel::fingerprint() const {
  Fnv1a h;
  h.add_bytes("forest", 6);
  for (const auto& t : trees_) {
    for (const auto& nd : t.nodes()) {
      h.add(nd.feature).add(nd.threshold).add(nd.left).add(nd.right).add(nd.value);
    }
  }
  return h.value();
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0;
  double impurity = 0;  // weighted child impurity, lower is better
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const int> labels, const ForestConfig& cfg,
             std::size_t mtry, Rng& rng)
      : x_(x), labels_(labels), cfg_(cfg), mtry_(mtry), rng_(rng) {}

  DecisionTree grow(std::vector<std::size_t> rows) {
    nodes_.clear();
    struct Task {
      int node;
      std::vector<std::size_t> rows;
      int depth;
    };
    nodes_.emplace_back();
    std::vector<Task> stack;
    stack.push_back({0, std::move(rows), 0});
    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      const std::size_t m = task.rows.size();
      std::size_t pos = 0;
      for (auto r : task.rows) pos += labels_[r] == 1;
      auto& nd = nodes_[static_cast<std::size_t>(task.node)];
      nd.value = m == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(m);
      nd.count = m;

      const bool pure = pos == 0 || pos == m;
      const bool depth_cap = cfg_.max_depth && task.depth >= *cfg_.max_depth;
      if (pure || depth_cap || m < 2 * static_cast<std::size_t>(cfg_.min_leaf)) continue;

      const Split s = best_split(task.rows, pos);
      if (s.feature < 0) continue;

      std::vector<std::size_t> left, right;
      for (auto r : task.rows) {
        (x_(r, static_cast<std::size_t>(s.feature)) <= s.threshold ? left : right).push_back(r);
      }
      const int l = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      const int rgt = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      auto& parent = nodes_[static_cast<std::size_t>(task.node)];
      parent.feature = s.feature;
      parent.threshold = s.threshold;
      parent.left = l;
      parent.right = rgt;
      stack.push_back({rgt, std::move(right), task.depth + 1});
      stack.push_back({l, std::move(left), task.depth + 1});
    }
    return DecisionTree(nodes_);
  }

 private:
  Split best_split(const std::vector<std::size_t>& rows, std::size_t pos) {
    const std::size_t m = rows.size();
    const std::size_t p = x_.cols();
    const double parent = 2.0 * static_cast<double>(pos) * static_cast<double>(m - pos) /
                          static_cast<double>(m);

    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng_);

    Split best;
    best.impurity = parent;
    std::size_t examined = 0;
    std::vector<std::pair<double, int>> vals(m);
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    for (std::size_t f : features) {
      if (examined >= mtry_) break;
      for (std::size_t r = 0; r < m; ++r) vals[r] = {x_(rows[r], f), labels_[rows[r]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;  // constant here; not counted
      ++examined;

      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        left_pos += vals[i].second == 1;
        if (vals[i].first == vals[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = m - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const std::size_t right_pos = pos - left_pos;
        const double gl = 2.0 * static_cast<double>(left_pos) * static_cast<double>(nl - left_pos) /
                          static_cast<double>(nl);
        const double gr = 2.0 * static_cast<double>(right_pos) *
                          static_cast<double>(nr - right_pos) / static_cast<double>(nr);
        const double imp = gl + gr;
        if (imp < best.impurity - 1e-12) {
          double thr = 0.5 * (vals[i].first + vals[i + 1].first);
          if (!(thr < vals[i + 1].first)) thr = vals[i].first;
          best = {static_cast<int>(f), thr, imp};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> labels_;
  const ForestConfig& cfg_;
  std::size_t mtry_;
  Rng& rng_;
  std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

std::shared_ptr<const ForestModel> fit_forest(const Matrix& x, std::span<const int> labels,
                                              const ForestConfig& config, std::uint64_t seed) {
  check_labels(x, labels, "fit_forest");
  if (config.n_trees < 1) throw ParameterError("fit_forest: n_trees must be >= 1");
  if (config.min_leaf < 1) throw ParameterError("fit_forest: min_leaf must be >= 1");
  if (config.max_depth && *config.max_depth < 0) throw ParameterError("fit_forest: max_depth must be >= 0");
  const std::size_t p = x.cols();
  std::size_t mtry = config.features_per_split ? static_cast<std::size_t>(*config.features_per_split)
                                               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  if (mtry < 1 || mtry > p) throw ParameterError("fit_forest: features_per_split must lie in [1, p]");

  const auto order = canonical_order(x, labels);
  const Matrix xs = x.select_rows(order);
  std::vector<int> ys(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) ys[r] = labels[order[r]];
  const std::size_t n = ys.size();

  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(t)});
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeGrower grower(xs, ys, config, mtry, rng);
    trees.push_back(grower.grow(std::move(rows)));
  }
  return std::make_shared<ForestModel>(std::move(trees), p);
}

// ---------------------------------------------------------------------------
// Functions / constants

std::uint64_t FunctionModel::fingerprint() const {
  return Fnv1a().add_bytes(name_.data(), name_.size()).add(dim_).value();
}

ModelPtr constant_model(double p, std::size_t dim) {
  return std::make_shared<FunctionModel>([p](std::span<const double>) { return p; }, dim,
                                         "constant:" + std::to_string(p));
}

// ---------------------------------------------------------------------------
// Specs and learners

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Naive: return "naive";
    case ClassifierKind::Logistic: return "logit";
    case ClassifierKind::GaussianNb: return "gnb";
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Forest: return "forest";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "naive") return ClassifierKind::Naive;
  if (name == "logit" || name == "logistic") return ClassifierKind::Logistic;
  if (name == "gnb" || name == "nbayes") return ClassifierKind::GaussianNb;
  if (name == "knn") return ClassifierKind::Knn;
  if (name == "forest" || name == "rf") return ClassifierKind::Forest;
  throw ParameterError("unknown classifier '" + std::string(name) + "'");
}

Learner make_learner(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::Naive:
      throw ParameterError("the naive method does not fit a classifier");
    case ClassifierKind::Logistic:
      return [ridge = spec.ridge](const Matrix& x, std::span<const int> y, Rng&) -> ModelPtr {
        return fit_logistic(x, y, ridge);
      };
    case ClassifierKind::GaussianNb:
      return [](const Matrix& x, std::span<const int> y, Rng&) -> ModelPtr { return fit_gnb(x, y); };
    case ClassifierKind::Knn:
      return [k = spec.knn_k](const Matrix& x, std::span<const int> y, Rng& rng) -> ModelPtr {
        const std::size_t kk = k ? std::min(*k, y.size()) : default_knn_k(y.size());
        return fit_knn(x, y, kk, rng());
      };
    case ClassifierKind::Forest:
      return [cfg = spec.forest](const Matrix& x, std::span<const int> y, Rng& rng) -> ModelPtr {
        return fit_forest(x, y, cfg, rng());
      };
  }
  throw ParameterError("unknown classifier kind");
}

CvResult cv_misclassification(const Matrix& x, std::span<const int> labels, const Learner& learner,
                              std::size_t k, Rng& rng) {
  if (labels.empty()) throw ParameterError("cv_misclassification: empty data");
  const auto folds = split_folds(labels.size(), k, rng);
  CvResult out;
  std::size_t errors = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const auto train = folds.complement(f);
    const auto test = folds.members(f);
    const Matrix xt = x.select_rows(train);
    std::vector<int> yt(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) yt[r] = labels[train[r]];
    ModelPtr model;
    try {
      Rng fold_rng(rng());
      model = learner(xt, yt, fold_rng);
    } catch (const DegeneracyError& e) {
      ++out.skipped_folds;
      out.warnings.push_back("fold " + std::to_string(f) + " skipped: " + e.what());
      continue;
    }
    for (auto i : test) {
      const int pred = predict_proba(*model, x.row(i)) > 0.5 ? 1 : -1;
      errors += pred != labels[i];
      ++out.evaluated;
    }
  }
  out.rate = out.evaluated ? static_cast<double>(errors) / static_cast<double>(out.evaluated)
                           : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace thr
