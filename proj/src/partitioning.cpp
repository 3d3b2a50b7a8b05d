#include "thr/partitioning.hpp"

#include <array>

#include "thr/error.hpp"
#include "thr/numeric.hpp"

namespace thr {

std::string CellLabel::to_string() const {
  const std::string ts = t > 0 ? "+1" : "-1";
  switch (kind) {
    case Kind::Whole: return "whole";
    case Kind::AtPair: return "a=" + std::to_string(arm) + ",t=" + ts;
    case Kind::LowerSide: return "L,t=" + ts;
    case Kind::UpperSide: return "U,t=" + ts;
  }
  return "?";
}

Partition::Partition(std::vector<CellLabel> cells, Rule rule)
    : cells_(std::move(cells)), rule_(std::move(rule)) {
  if (cells_.empty() || cells_.size() > 4) throw ParameterError("Partition: need 1..4 cells");
  for (std::size_t i = 0; i < cells_.size(); ++i)
    for (std::size_t j = i + 1; j < cells_.size(); ++j)
      if (cells_[i] == cells_[j]) throw ParameterError("Partition: duplicate cell labels");
}

std::size_t Partition::assign(std::span<const double> x) const {
  const std::size_t c = rule_(x);
  if (c >= cells_.size()) throw InvariantError("Partition: rule produced an invalid cell");
  return c;
}

std::vector<std::size_t> Partition::assign(const Matrix& x) const {
  std::vector<std::size_t> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = assign(x.row(i));
  return out;
}

const std::vector<CellLabel>& at_pair_cells() {
  static const std::vector<CellLabel> cells = {CellLabel::at_pair(0, 1), CellLabel::at_pair(0, -1),
                                               CellLabel::at_pair(1, 1), CellLabel::at_pair(1, -1)};
  return cells;
}

Partition naive_partition() {
  return Partition({CellLabel::whole()}, [](std::span<const double>) { return std::size_t{0}; });
}

std::size_t plug_in_cell(double mu0, double mu1, std::span<const double> x, std::uint64_t tie_seed) {
  // Order matches at_pair_cells(); (1-t)/2 + t*mu_a = P(Y(a) = t | x).
  const std::array<double, 4> v = {mu0, 1.0 - mu0, mu1, 1.0 - mu1};
  double best = v[0];
  for (double s : v) best = std::max(best, s);
  std::array<std::size_t, 4> ties{};
  std::size_t n_ties = 0;
  for (std::size_t c = 0; c < 4; ++c)
    if (v[c] == best) ties[n_ties++] = c;
  if (n_ties == 1) return ties[0];
  const std::uint64_t h = mix64(Fnv1a().add(tie_seed).add(x).value());
  return ties[h % n_ties];
}

namespace {

double checked_prob(const ProbModel& m, std::span<const double> x) {
  if (x.size() != m.dim()) throw ShapeError("partition rule: covariate dimension mismatch");
  const double p = m.raw_predict(x);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvariantError("partition rule: model '" + std::string(m.kind()) +
                         "' returned a probability outside [0,1]");
  }
  return p;
}

void check_pair(const ModelPtr& mu0, const ModelPtr& mu1) {
  if (!mu0 || !mu1) throw ParameterError("partition: null model");
  if (mu0->dim() != mu1->dim()) throw ShapeError("partition: models disagree on covariate dimension");
}

}  // namespace

Partition plug_in_partition(ModelPtr mu0, ModelPtr mu1, std::uint64_t tie_seed) {
  check_pair(mu0, mu1);
  return Partition(at_pair_cells(), [mu0, mu1, tie_seed](std::span<const double> x) {
    return plug_in_cell(checked_prob(*mu0, x), checked_prob(*mu1, x), x, tie_seed);
  });
}

std::pair<Partition, Partition> two_cell_partitions(ModelPtr mu0, ModelPtr mu1) {
  check_pair(mu0, mu1);
  Partition lower({CellLabel::lower_side(1), CellLabel::lower_side(-1)},
                  [mu0, mu1](std::span<const double> x) -> std::size_t {
                    return checked_prob(*mu0, x) <= checked_prob(*mu1, x) ? 0 : 1;
                  });
  Partition upper({CellLabel::upper_side(1), CellLabel::upper_side(-1)},
                  [mu0, mu1](std::span<const double> x) -> std::size_t {
                    return checked_prob(*mu0, x) + checked_prob(*mu1, x) <= 1.0 ? 0 : 1;
                  });
  return {std::move(lower), std::move(upper)};
}

Partition oracle_partition(ProbFunction mu0, ProbFunction mu1, std::size_t dim, std::uint64_t tie_seed) {
  return plug_in_partition(std::make_shared<FunctionModel>(std::move(mu0), dim, "oracle_mu0"),
                           std::make_shared<FunctionModel>(std::move(mu1), dim, "oracle_mu1"), tie_seed);
}

PairClassifier as_pair_classifier(const Partition& partition) {
  for (const auto& c : partition.cells()) {
    if (c.kind != CellLabel::Kind::AtPair) {
      throw ParameterError("as_pair_classifier: partition cells must be (arm, outcome) pairs");
    }
  }
  return [partition](std::span<const double> x) {
    const auto& c = partition.label(partition.assign(x));
    return std::pair<int, int>{c.arm, c.t};
  };
}

double weighted_bayes_risk(const PairClassifier& g, const Matrix& x, std::span<const int> y0,
                           std::span<const int> y1, std::span<const double> weights) {
  const std::size_t n = x.rows();
  if (y0.size() != n || y1.size() != n || (!weights.empty() && weights.size() != n)) {
    throw ShapeError("weighted_bayes_risk: inconsistent lengths");
  }
  double risk = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const auto [a, t] = g(x.row(i));
    const double miss1 = (a == 1 && t == y1[i]) ? 0.0 : 1.0;
    const double miss0 = (a == 0 && t == y0[i]) ? 0.0 : 1.0;
    risk += w * (miss1 + miss0);
    total += w;
  }
  if (total <= 0) throw ParameterError("weighted_bayes_risk: total weight must be positive");
  return risk / total;
}

}  // namespace thr
