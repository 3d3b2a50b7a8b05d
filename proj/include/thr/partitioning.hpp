#pragma once

// Partitions of covariate space into at most four cells. A partition is a
// fixed, deterministic rule: ties in the plug-in argmax are resolved by a
// hash of (x, tie_seed), so the same x always lands in the same cell.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thr/classifiers.hpp"

namespace thr {

struct CellLabel {
  enum class Kind { Whole, AtPair, LowerSide, UpperSide };
  Kind kind = Kind::Whole;
  int arm = 0;  // AtPair only
  int t = 1;    // AtPair, LowerSide, UpperSide

  static CellLabel whole() { return {}; }
  static CellLabel at_pair(int a, int t) { return {Kind::AtPair, a, t}; }
  static CellLabel lower_side(int t) { return {Kind::LowerSide, 0, t}; }
  static CellLabel upper_side(int t) { return {Kind::UpperSide, 0, t}; }

  std::string to_string() const;
  bool operator==(const CellLabel&) const = default;
};

class Partition {
 public:
  using Rule = std::function<std::size_t(std::span<const double>)>;

  Partition(std::vector<CellLabel> cells, Rule rule);

  std::size_t num_cells() const noexcept { return cells_.size(); }
  const std::vector<CellLabel>& cells() const noexcept { return cells_; }
  const CellLabel& label(std::size_t cell) const { return cells_.at(cell); }

  std::size_t assign(std::span<const double> x) const;
  std::vector<std::size_t> assign(const Matrix& x) const;

 private:
  std::vector<CellLabel> cells_;
  Rule rule_;
};

/// The four (arm, outcome) pairs in cell order: (0,+1), (0,-1), (1,+1), (1,-1).
const std::vector<CellLabel>& at_pair_cells();

/// Single cell covering the whole space.
Partition naive_partition();

/// Index into at_pair_cells() of argmax over (a,t) of P(Y(a)=t | x) given
/// the two probabilities; exact ties are broken by hashing (x, tie_seed).
std::size_t plug_in_cell(double mu0, double mu1, std::span<const double> x, std::uint64_t tie_seed);

/// Four-cell plug-in partition. Throws InvariantError if a model returns a
/// value outside [0,1] and ShapeError if the two models disagree on dim.
Partition plug_in_partition(ModelPtr mu0, ModelPtr mu1, std::uint64_t tie_seed);

/// Lower partition: {mu0 <= mu1} (t=+1) vs complement (t=-1).
/// Upper partition: {mu0 + mu1 <= 1} (t=+1) vs complement (t=-1).
std::pair<Partition, Partition> two_cell_partitions(ModelPtr mu0, ModelPtr mu1);

using ProbFunction = std::function<double(std::span<const double>)>;

/// Plug-in partition built from known conditional probabilities.
Partition oracle_partition(ProbFunction mu0, ProbFunction mu1, std::size_t dim, std::uint64_t tie_seed);

/// Maps x to an (arm, outcome) pair.
using PairClassifier = std::function<std::pair<int, int>(std::span<const double>)>;

/// Adapts a partition whose cells are all AtPair labels.
PairClassifier as_pair_classifier(const Partition& partition);

/// Empirical m_1(g) + m_0(g) = P(g(X) != (1, Y(1))) + P(g(X) != (0, Y(0)))
/// over units with both potential outcomes known. Optional unit weights.
double weighted_bayes_risk(const PairClassifier& g, const Matrix& x, std::span<const int> y0,
                           std::span<const int> y1, std::span<const double> weights = {});

}  // namespace thr
