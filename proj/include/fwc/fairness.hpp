#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "fwc/cost.hpp"
#include "fwc/dataio.hpp"

namespace fwc {

// Outcome distribution p_T(y) the group conditionals are held to.
struct TargetDistribution {
  std::vector<double> probs;

  // Empirical outcome marginal of the dataset.
  static TargetDistribution empirical(const Dataset& dataset);
  void validate() const;
};

struct FairnessConfig {
  double epsilon = 0.05;
  TargetDistribution target;
};

struct ComboLabel {
  int d = 0;
  int y = 0;
  friend auto operator<=>(const ComboLabel&, const ComboLabel&) = default;
};

// Number of coreset points per (d, y) combination.
struct ComboAllocation {
  std::size_t num_d = 0;
  std::size_t num_y = 0;
  std::map<ComboLabel, std::size_t> counts;

  std::size_t total() const;
  // One label per coreset point: combos in (d, y) order, each repeated m_dy times.
  std::vector<ComboLabel> point_labels() const;
  std::vector<int> present_groups() const;
};

ComboAllocation allocate_combos(const Dataset& dataset, std::size_t m);

enum class Bound { Upper, Lower };

// A theta >= 0 encodes |p_theta(y|d) / p_T(y) - 1| <= epsilon.
struct ConstraintMatrix {
  struct RowMeta {
    int d;
    int y;
    Bound direction;
  };
  RowMatrix rows;
  std::vector<RowMeta> row_meta;

  std::size_t h() const { return row_meta.size(); }
  std::size_t m() const { return static_cast<std::size_t>(rows.cols()); }
};

ConstraintMatrix build_constraints(const ComboAllocation& allocation, const FairnessConfig& config);
// Same construction for an explicit column labelling.
ConstraintMatrix build_constraints(std::span<const ComboLabel> labels, std::size_t num_y,
                                   const FairnessConfig& config);

// A constraint matrix with zero rows over m columns (the unconstrained problem).
ConstraintMatrix no_constraints(std::size_t m);

struct Disparity {
  double value = 0.0;
  int d = -1;
  int y = -1;
};

// max over (d, y) of |p_theta(y|d) / p_T(y) - 1|, over groups that carry
// coreset points and outcome levels with positive target mass.
Disparity disparity_J(std::span<const double> theta, std::span<const ComboLabel> labels,
                      const TargetDistribution& target);
Disparity disparity_J(const Coreset& coreset, const TargetDistribution& target);

// |P(h=1 | group b) - P(h=1 | group a)| for the two groups present.
double demographic_disparity(std::span<const int> predictions, std::span<const int> groups);

}  // namespace fwc
