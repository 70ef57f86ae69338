#include "fwc/fairness.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fwc/errors.hpp"

namespace fwc {

TargetDistribution TargetDistribution::empirical(const Dataset& dataset) {
  TargetDistribution t;
  t.probs.assign(dataset.num_y(), 0.0);
  for (const auto& r : dataset.records) t.probs[static_cast<std::size_t>(r.y)] += 1.0;
  for (double& p : t.probs) p /= static_cast<double>(dataset.n());
  return t;
}

void TargetDistribution::validate() const {
  if (probs.empty()) throw ContractViolation("target distribution is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ContractViolation("target probabilities must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ContractViolation("target probabilities must sum to 1");
}

std::size_t ComboAllocation::total() const {
  std::size_t t = 0;
  for (const auto& [combo, c] : counts) t += c;
  return t;
}

std::vector<ComboLabel> ComboAllocation::point_labels() const {
  std::vector<ComboLabel> labels;
  for (const auto& [combo, c] : counts) labels.insert(labels.end(), c, combo);
  return labels;
}

std::vector<int> ComboAllocation::present_groups() const {
  std::set<int> groups;
  for (const auto& [combo, c] : counts)
    if (c > 0) groups.insert(combo.d);
  return {groups.begin(), groups.end()};
}

ComboAllocation allocate_combos(const Dataset& dataset, std::size_t m) {
  std::map<ComboLabel, std::size_t> present;
  for (const auto& r : dataset.records) ++present[{r.d, r.y}];
  if (m < present.size())
    throw InfeasibleSizeError("coreset size m=" + std::to_string(m) + " is below the minimum m=" +
                              std::to_string(present.size()) +
                              " (one point per (protected, outcome) combination)");

  // Every present combo starts with one point; each remaining unit goes to the
  // combo with the largest deficit quota - count (ties: lowest (d, y)). This
  // is largest-remainder apportionment with a floor of one.
  const double n = static_cast<double>(dataset.n());
  std::vector<ComboLabel> combos;
  std::vector<double> quota;
  std::vector<std::size_t> count;
  for (const auto& [combo, c] : present) {
    combos.push_back(combo);
    quota.push_back(static_cast<double>(m) * static_cast<double>(c) / n);
    count.push_back(1);
  }
  for (std::size_t unit = combos.size(); unit < m; ++unit) {
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < combos.size(); ++k) {
      double deficit = quota[k] - static_cast<double>(count[k]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = k;
      }
    }
    ++count[best];
  }

  ComboAllocation alloc;
  alloc.num_d = dataset.num_d();
  alloc.num_y = dataset.num_y();
  for (std::size_t k = 0; k < combos.size(); ++k) alloc.counts[combos[k]] = count[k];
  return alloc;
}

ConstraintMatrix build_constraints(std::span<const ComboLabel> labels, std::size_t num_y,
                                   const FairnessConfig& config) {
  if (!(config.epsilon >= 0.0)) throw ContractViolation("epsilon must be nonnegative");
  config.target.validate();
  if (config.target.probs.size() != num_y)
    throw ContractViolation("target distribution size does not match outcome levels");
  std::set<int> groups;
  for (const auto& l : labels) groups.insert(l.d);

  const double eps = config.epsilon;
  ConstraintMatrix cm;
  const auto m = static_cast<Eigen::Index>(labels.size());
  cm.rows = RowMatrix::Zero(static_cast<Eigen::Index>(2 * groups.size() * num_y), m);
  Eigen::Index row = 0;
  for (int d : groups) {
    for (std::size_t yy = 0; yy < num_y; ++yy) {
      const int y = static_cast<int>(yy);
      const double p = config.target.probs[yy];
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto& l = labels[static_cast<std::size_t>(j)];
        if (l.d != d) continue;
        double hit = l.y == y ? 1.0 : 0.0;
        cm.rows(row, j) = (1.0 + eps) * p - hit;
        cm.rows(row + 1, j) = hit - (1.0 - eps) * p;
      }
      cm.row_meta.push_back({d, y, Bound::Upper});
      cm.row_meta.push_back({d, y, Bound::Lower});
      row += 2;
    }
  }
  return cm;
}

ConstraintMatrix build_constraints(const ComboAllocation& allocation, const FairnessConfig& config) {
  if (allocation.total() == 0) throw ContractViolation("empty allocation");
  auto labels = allocation.point_labels();
  return build_constraints(labels, allocation.num_y, config);
}

ConstraintMatrix no_constraints(std::size_t m) {
  ConstraintMatrix cm;
  cm.rows = RowMatrix::Zero(0, static_cast<Eigen::Index>(m));
  return cm;
}

Disparity disparity_J(std::span<const double> theta, std::span<const ComboLabel> labels,
                      const TargetDistribution& target) {
  if (theta.size() != labels.size()) throw ContractViolation("weights and labels differ in length");
  std::map<int, double> group_mass;
  std::map<ComboLabel, double> combo_mass;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (theta[j] < 0.0) throw ContractViolation("negative weight");
    group_mass[labels[j].d] += theta[j];
    combo_mass[labels[j]] += theta[j];
  }
  Disparity out;
  for (const auto& [d, mass] : group_mass) {
    if (!(mass > 0.0))
      throw DegenerateGroupError("protected group " + std::to_string(d) + " has zero total weight");
    for (std::size_t yy = 0; yy < target.probs.size(); ++yy) {
      const double p = target.probs[yy];
      if (!(p > 0.0)) continue;
      auto it = combo_mass.find({d, static_cast<int>(yy)});
      double cond = it == combo_mass.end() ? 0.0 : it->second / mass;
      double j = std::abs(cond / p - 1.0);
      if (out.d < 0 || j > out.value) out = {j, d, static_cast<int>(yy)};
    }
  }
  if (out.d < 0) out.value = 0.0;
  return out;
}

Disparity disparity_J(const Coreset& coreset, const TargetDistribution& target) {
  std::vector<ComboLabel> labels;
  labels.reserve(coreset.size());
  for (const auto& pt : coreset.points) labels.push_back({pt.d, pt.y});
  return disparity_J(coreset.weights, labels, target);
}

double demographic_disparity(std::span<const int> predictions, std::span<const int> groups) {
  if (predictions.size() != groups.size())
    throw ContractViolation("predictions and groups differ in length");
  std::map<int, std::pair<double, double>> stats;  // group -> (positives, count)
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& s = stats[groups[i]];
    s.first += predictions[i] != 0 ? 1.0 : 0.0;
    s.second += 1.0;
  }
  if (stats.size() != 2)
    throw DegenerateGroupError("demographic disparity needs exactly two protected groups, found " +
                               std::to_string(stats.size()));
  auto it = stats.begin();
  double r0 = it->second.first / it->second.second;
  ++it;
  double r1 = it->second.first / it->second.second;
  return std::abs(r1 - r0);
}

}  // namespace fwc
