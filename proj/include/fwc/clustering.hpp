#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fwc/cost.hpp"
#include "fwc/dataio.hpp"
#include "fwc/fairness.hpp"

namespace fwc {

enum class UpdateRule { Mean, CoordinateMedian, Medoid };

const char* to_string(UpdateRule rule);
UpdateRule parse_update(const std::string& text);

using Centroids = std::vector<std::vector<double>>;

struct LloydConfig {
  std::size_t k = 1;
  CostMetric metric{MetricKind::SqL2, 1.0};
  UpdateRule update = UpdateRule::Mean;
  // Fixed (d, y) per centroid; assignment then pays the mismatch penalty.
  std::optional<std::vector<ComboLabel>> labels;
  std::optional<Centroids> initial_centroids;  // k-means++ when absent
  int max_iters = 300;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  bool record_history = false;
};

struct LloydResult {
  Centroids centroids;
  std::vector<std::size_t> assignments;
  std::vector<double> cost_trace;
  int iterations = 0;
  bool converged = false;
  // Per iteration: the assignment and the centroids it was computed from.
  std::vector<std::vector<std::size_t>> assignment_history;
  std::vector<Centroids> centroid_history;
};

// Alternates nearest-centroid assignment (first-min tie-break) with centroid
// updates. Empty clusters keep their previous centroid.
LloydResult lloyd(const Dataset& dataset, const LloydConfig& config);

// D^2-weighted seeding; returns row indices of the chosen points.
std::vector<std::size_t> kmeanspp_indices(std::span<const Record> records, std::size_t k,
                                          std::uint64_t seed);
Centroids kmeanspp_seed(std::span<const Record> records, std::size_t k, std::uint64_t seed);

// m records drawn without replacement, unit weights.
Coreset uniform_subsample(const Dataset& dataset, std::size_t m, std::uint64_t seed);

// Baseline coreset from a clustering: each centroid weighted by m * |cluster| / n
// and labelled with the majority (d, y) of its members.
Coreset coreset_from_clusters(const Dataset& dataset, const LloydResult& result);

// Weighted lower median: smallest value whose cumulative weight reaches half
// the total.
double weighted_lower_median(std::vector<std::pair<double, double>> value_weight);

}  // namespace fwc
