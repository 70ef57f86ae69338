#include "fwc/mm_driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "fwc/errors.hpp"
#include "fwc/parallel.hpp"

namespace fwc {

void MMConfig::validate() const {
  if (update == UpdateRule::Mean && metric.kind != MetricKind::SqL2)
    throw InvalidSpecError("mean update requires the sql2 metric");
  if (update == UpdateRule::CoordinateMedian && metric.kind != MetricKind::L1)
    throw InvalidSpecError("median update requires the l1 metric");
  if (max_outer_iters < 1) throw InvalidSpecError("max_outer_iters must be positive");
  if (!(tol_objective >= 0.0) || !(tol_x >= 0.0)) throw InvalidSpecError("tolerances must be >= 0");
  if (!(metric.cat_penalty >= 0.0)) throw InvalidSpecError("categorical penalty must be >= 0");
}

namespace {

std::size_t nearest_record(const Dataset& ds, const std::vector<std::size_t>& rows,
                           const std::vector<double>& x, MetricKind kind) {
  std::size_t best = rows.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i : rows) {
    double d = feature_distance(ds.records[i].x, x, kind);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<Record> labelled_points(const Centroids& points, const std::vector<ComboLabel>& labels) {
  std::vector<Record> out(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) out[j] = {labels[j].d, points[j], labels[j].y};
  return out;
}

double max_movement(const Centroids& a, const Centroids& b) {
  double mv = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    for (std::size_t k = 0; k < a[j].size(); ++k) mv = std::max(mv, std::abs(a[j][k] - b[j][k]));
  return mv;
}

}  // namespace

Centroids initialize(const Dataset& dataset, const ComboAllocation& allocation,
                     const MMConfig& config, bool* padded) {
  if (padded) *padded = false;
  std::map<ComboLabel, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < dataset.n(); ++i)
    rows[{dataset.records[i].d, dataset.records[i].y}].push_back(i);

  Centroids out;
  std::uint64_t combo_index = 0;
  for (const auto& [combo, k] : allocation.counts) {
    ++combo_index;
    if (k == 0) continue;
    auto it = rows.find(combo);
    if (it == rows.end() || it->second.empty())
      throw ContractViolation("allocation names a combo with no records");
    const auto& members = it->second;
    Centroids local;
    if (members.size() < k) {
      // Not enough records: every record once, then duplicates in order.
      if (padded) *padded = true;
      for (std::size_t j = 0; j < k; ++j) local.push_back(dataset.records[members[j % members.size()]].x);
    } else if (k == 1) {
      std::vector<double> c(dataset.p(), 0.0);
      for (std::size_t i : members)
        for (std::size_t f = 0; f < dataset.p(); ++f) c[f] += dataset.records[i].x[f];
      for (double& v : c) v /= static_cast<double>(members.size());
      local.push_back(std::move(c));
    } else {
      Dataset sub = subset(dataset, members);
      LloydConfig lc;
      lc.k = k;
      lc.metric = {MetricKind::SqL2, config.metric.cat_penalty};
      lc.update = UpdateRule::Mean;
      lc.seed = config.seed * 1000003ULL + combo_index;
      local = lloyd(sub, lc).centroids;
    }
    if (config.update == UpdateRule::Medoid)
      for (auto& c : local) c = dataset.records[nearest_record(dataset, members, c, config.metric.kind)].x;
    for (auto& c : local) out.push_back(std::move(c));
  }
  return out;
}

Centroids surrogate_minimize(const TransportPlan& plan, const Dataset& dataset,
                             const Centroids& points, const MMConfig& config) {
  const std::size_t m = points.size();
  const std::size_t p = dataset.p();
  if (plan.m != m || plan.n != dataset.n()) throw ContractViolation("plan shape does not match");
  // Column j's rows with their fraction of the row mass.
  std::vector<std::vector<std::pair<std::size_t, double>>> members(m);
  plan.for_each_entry([&](std::size_t i, Eigen::Index j, double f) {
    if (f > 0.0) members[static_cast<std::size_t>(j)].emplace_back(i, f);
  });

  Centroids next = points;
  parallel_for(
      m,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const auto& rows = members[j];
          if (rows.empty()) continue;
          auto& x = next[j];
          switch (config.update) {
            case UpdateRule::Mean: {
              std::fill(x.begin(), x.end(), 0.0);
              double mass = 0.0;
              for (const auto& [i, f] : rows) {
                for (std::size_t k = 0; k < p; ++k) x[k] += f * dataset.records[i].x[k];
                mass += f;
              }
              for (double& v : x) v /= mass;
              break;
            }
            case UpdateRule::CoordinateMedian: {
              std::vector<std::pair<double, double>> vw(rows.size());
              for (std::size_t k = 0; k < p; ++k) {
                for (std::size_t r = 0; r < rows.size(); ++r)
                  vw[r] = {dataset.records[rows[r].first].x[k], rows[r].second};
                x[k] = weighted_lower_median(vw);
              }
              break;
            }
            case UpdateRule::Medoid: {
              // Label mismatch cost is fixed per column, so only the feature
              // part varies over candidates.
              auto weighted = [&](const std::vector<double>& cand, double bound) {
                double s = 0.0;
                for (const auto& [i, f] : rows) {
                  s += f * feature_distance(dataset.records[i].x, cand, config.metric.kind);
                  if (s >= bound) break;
                }
                return s;
              };
              double best = weighted(x, std::numeric_limits<double>::infinity());
              for (const Record& cand : dataset.records) {
                double s = weighted(cand.x, best);
                if (s < best) {
                  best = s;
                  x = cand.x;
                }
              }
              break;
            }
          }
        }
      },
      1);
  return next;
}

MMResult run(const Dataset& dataset, std::size_t m, const std::optional<FairnessConfig>& fairness,
             const MMConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  if (dataset.n() == 0) throw EmptyDatasetError("dataset has no records");
  ComboAllocation allocation = allocate_combos(dataset, m);
  bool padded = false;
  Centroids init = initialize(dataset, allocation, config, &padded);
  MMResult res = run_from(dataset, allocation, init, fairness, config);
  res.report.padded = padded;
  // Includes initialization.
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

MMResult run_from(const Dataset& dataset, const ComboAllocation& allocation,
                  const Centroids& initial, const std::optional<FairnessConfig>& fairness,
                  const MMConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ComboLabel> labels = allocation.point_labels();
  const std::size_t m = labels.size();
  if (initial.size() != m) throw ContractViolation("one initial point per coreset slot required");

  FairnessConfig fair_cfg;
  if (fairness) {
    fair_cfg = *fairness;
    if (fair_cfg.target.probs.empty()) fair_cfg.target = TargetDistribution::empirical(dataset);
  } else {
    fair_cfg.target = TargetDistribution::empirical(dataset);
  }
  const ConstraintMatrix A = fairness ? build_constraints(labels, dataset.num_y(), fair_cfg)
                                      : no_constraints(m);
  const bool constrained = A.h() > 0;

  MMResult res;
  res.allocation = allocation;
  RunReport& rep = res.report;
  rep.constrained = fairness.has_value();
  rep.epsilon = fairness ? fair_cfg.epsilon : 0.0;

  InnerOptions inner = config.inner;
  Centroids X = initial;
  RowMatrix C = build_cost_matrix(dataset, labelled_points(X, labels), config.metric).values;
  InnerSolution sol = solve_inner(C, A, inner);
  TransportPlan plan = sol.plan;
  double F = sol.plan_cost;

  auto feasibility = [&](const TransportPlan& pl) {
    return std::min(0.0, min_constraint_slack(A, pl.theta()));
  };

  bool kept = false;
  for (int k = 0;; ++k) {
    IterationDiagnostics diag;
    diag.objective = F;
    diag.lp_value = sol.value;
    diag.constraint_slack = sol.max_constraint_violation;
    diag.inner_cuts = sol.cuts;
    diag.inner_gap = sol.gap;
    diag.inner_converged = sol.converged;
    diag.inner_boundary = sol.boundary_warning;
    diag.feasibility_moves = sol.feasibility_moves;
    diag.kept_previous_plan = kept;
    if (!sol.converged) rep.inner_all_converged = false;
    rep.objective_trace.push_back(F);
    rep.iterations = k + 1;
    if (config.record_history) {
      rep.assignment_history.emplace_back(plan.assignment.begin(), plan.assignment.end());
      rep.centroid_history.push_back(X);
    }

    Centroids X_next = surrogate_minimize(plan, dataset, X, config);
    if (config.reseed_empty) {
      // Zero-mass columns do not enter g, so moving them keeps the descent.
      const std::vector<double> theta = plan.theta();
      std::vector<std::size_t> empty;
      for (std::size_t j = 0; j < theta.size(); ++j)
        if (theta[j] == 0.0) empty.push_back(j);
      if (!empty.empty()) {
        std::vector<std::pair<double, std::size_t>> far(dataset.n());
        for (std::size_t i = 0; i < dataset.n(); ++i)
          far[i] = {-C.row(static_cast<Eigen::Index>(i)).minCoeff(), i};
        std::sort(far.begin(), far.end());
        for (std::size_t e = 0; e < empty.size() && e < far.size(); ++e)
          X_next[empty[e]] = dataset.records[far[e].second].x;
      }
    }
    std::vector<std::size_t> moved;
    for (std::size_t j = 0; j < X.size(); ++j)
      if (X_next[j] != X[j]) moved.push_back(j);
    RowMatrix C_next = C;
    update_cost_columns(C_next, dataset, labelled_points(X_next, labels), config.metric, moved);
    const double g_next = plan.cost(C_next);
    diag.surrogate_next = g_next;
    diag.movement = max_movement(X_next, X);

    // tol_objective = 0 switches the surrogate test off; coordinate medians can
    // move across a flat region with g unchanged, and Lloyd would keep going.
    const bool stalled =
        config.tol_objective > 0.0 && std::abs(F - g_next) <= config.tol_objective * std::abs(F);
    if (stalled || diag.movement <= config.tol_x) {
      rep.diagnostics.push_back(diag);
      rep.converged = true;
      break;
    }
    rep.diagnostics.push_back(diag);
    if (k + 1 >= config.max_outer_iters) break;

    inner.warm_start = sol.lambda_star;
    InnerSolution next = solve_inner(C_next, A, inner);
    TransportPlan next_plan = next.plan;
    double F_next = next.plan_cost;
    kept = false;
    if (constrained && g_next < F_next && feasibility(plan) >= feasibility(next_plan)) {
      // The previous plan is still feasible and cheaper on the new points.
      next_plan = plan;
      F_next = g_next;
      kept = true;
    }
    X = std::move(X_next);
    C = std::move(C_next);
    sol = std::move(next);
    plan = std::move(next_plan);
    F = F_next;
    sol.max_constraint_violation = min_constraint_slack(A, plan.theta());
  }

  res.coreset.points = labelled_points(X, labels);
  res.coreset.weights = plan.theta();
  const double slack = min_constraint_slack(A, res.coreset.weights);
  rep.feasible = slack >= -1e-6;
  try {
    rep.disparity = disparity_J(res.coreset, fair_cfg.target);
  } catch (const DegenerateGroupError&) {
    // A protected group lost all its mass; A theta >= 0 holds vacuously there.
    rep.disparity = {std::numeric_limits<double>::infinity(), -1, -1};
    rep.feasible = false;
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace fwc
