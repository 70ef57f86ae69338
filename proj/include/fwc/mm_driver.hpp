#pragma once

#include <optional>
#include <vector>

#include "fwc/clustering.hpp"
#include "fwc/dataio.hpp"
#include "fwc/dual_solver.hpp"
#include "fwc/fairness.hpp"

namespace fwc {

struct MMConfig {
  CostMetric metric{MetricKind::L1, 1.0};
  UpdateRule update = UpdateRule::CoordinateMedian;
  int max_outer_iters = 300;
  double tol_objective = 1e-8;  // relative change of the surrogate; 0 disables
                                // the test
  double tol_x = 1e-9;          // max coordinate movement
  std::uint64_t seed = 0;
  InnerOptions inner;
  bool record_history = false;
  // Move zero-mass columns to the records farthest from every point. Off by
  // default: stale points are kept.
  bool reseed_empty = false;

  // mean needs SqL2, median needs L1; medoid works with either.
  void validate() const;
};

struct IterationDiagnostics {
  double objective = 0.0;       // <C(X^k), P_k> = g(X^k; X^k)
  double lp_value = 0.0;        // inner LP value at C(X^k)
  double surrogate_next = 0.0;  // g(X^{k+1}; X^k)
  double movement = 0.0;
  double constraint_slack = 0.0;
  int inner_cuts = 0;
  double inner_gap = 0.0;
  bool inner_converged = true;
  bool inner_boundary = false;
  int feasibility_moves = 0;
  bool kept_previous_plan = false;
};

struct RunReport {
  // F(C(X^k)) per iteration: cost of the feasible plan paired with X^k.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;         // outer loop stopped on a tolerance test
  bool inner_all_converged = true;
  bool feasible = true;           // A theta >= -1e-6 for the returned weights
  bool padded = false;            // some combo had fewer records than points
  Disparity disparity;
  double epsilon = 0.0;           // 0 with no fairness constraints
  bool constrained = false;
  double wall_seconds = 0.0;
  std::vector<IterationDiagnostics> diagnostics;

  // Filled when MMConfig::record_history is set.
  std::vector<std::vector<std::size_t>> assignment_history;
  std::vector<Centroids> centroid_history;

  bool success() const { return converged && inner_all_converged && feasible; }
};

struct MMResult {
  Coreset coreset;
  RunReport report;
  ComboAllocation allocation;
};

// Per (d, y) combo: k-means on that combo's records with k = m_dy. Medoid mode
// snaps each centroid to the nearest record of the combo.
Centroids initialize(const Dataset& dataset, const ComboAllocation& allocation,
                     const MMConfig& config, bool* padded = nullptr);

// argmin over X of <C(X), P> with the (d, y) labels fixed. Columns that
// receive no mass keep their previous point.
Centroids surrogate_minimize(const TransportPlan& plan, const Dataset& dataset,
                             const Centroids& points, const MMConfig& config);

// No fairness config: the unconstrained problem (h = 0). An empty target in the
// fairness config means the empirical outcome distribution.
MMResult run(const Dataset& dataset, std::size_t m, const std::optional<FairnessConfig>& fairness,
             const MMConfig& config);

// Same loop from explicit starting points, one per allocation slot in
// point_labels() order.
MMResult run_from(const Dataset& dataset, const ComboAllocation& allocation,
                  const Centroids& initial, const std::optional<FairnessConfig>& fairness,
                  const MMConfig& config);

}  // namespace fwc
