#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fwc/errors.hpp"
#include "fwc/eval.hpp"
#include "fwc/mm_driver.hpp"
#include "support/generators.hpp"

using namespace fwc;

namespace {

Dataset line_data(std::vector<double> xs) {
  Dataset ds;
  ds.feature_names = {"f"};
  ds.d_levels = {"a"};
  ds.y_levels = {"0"};
  for (double x : xs) ds.records.push_back({0, {x}, 0});
  return ds;
}

TransportPlan all_to(std::size_t n, std::size_t m, Eigen::Index col) {
  TransportPlan plan;
  plan.n = n;
  plan.m = m;
  plan.assignment.assign(n, col);
  return plan;
}

}  // namespace

TEST_CASE("MMConfig validation") {
  MMConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.update = UpdateRule::Mean;
  CHECK_THROWS_AS(cfg.validate(), InvalidSpecError);
  cfg.metric.kind = MetricKind::SqL2;
  CHECK_NOTHROW(cfg.validate());
  cfg.update = UpdateRule::CoordinateMedian;
  CHECK_THROWS_AS(cfg.validate(), InvalidSpecError);
  cfg.update = UpdateRule::Medoid;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("surrogate_minimize examples") {
  MMConfig l1;
  SUBCASE("median of {0, 2} under L1 is the lower value") {
    Dataset ds = line_data({0.0, 2.0});
    auto next = surrogate_minimize(all_to(2, 1, 0), ds, {{5.0}}, l1);
    CHECK(next[0][0] == 0.0);
  }
  SUBCASE("median of {1, 2, 100}") {
    Dataset ds = line_data({1.0, 2.0, 100.0});
    auto next = surrogate_minimize(all_to(3, 1, 0), ds, {{0.0}}, l1);
    CHECK(next[0][0] == 2.0);
  }
  SUBCASE("mean under squared L2") {
    MMConfig cfg;
    cfg.metric.kind = MetricKind::SqL2;
    cfg.update = UpdateRule::Mean;
    Dataset ds = line_data({1.0, 2.0, 100.0});
    auto next = surrogate_minimize(all_to(3, 1, 0), ds, {{0.0}}, cfg);
    CHECK(next[0][0] == doctest::Approx(103.0 / 3.0));
  }
  SUBCASE("split row contributes its shares") {
    MMConfig cfg;
    cfg.metric.kind = MetricKind::SqL2;
    cfg.update = UpdateRule::Mean;
    Dataset ds = line_data({0.0, 4.0});
    TransportPlan plan = all_to(2, 2, 0);
    plan.assignment[1] = TransportPlan::kSplit;
    plan.shares = {{1, 0, 0.25}, {1, 1, 0.75}};
    auto next = surrogate_minimize(plan, ds, {{9.0}, {9.0}}, cfg);
    CHECK(next[0][0] == doctest::Approx(4.0 * 0.25 / 1.25));
    CHECK(next[1][0] == doctest::Approx(4.0));
  }
  SUBCASE("empty column keeps its point") {
    Dataset ds = line_data({0.0, 2.0});
    auto next = surrogate_minimize(all_to(2, 2, 0), ds, {{5.0}, {7.5}}, l1);
    CHECK(next[1][0] == 7.5);
  }
  SUBCASE("shape mismatch") {
    Dataset ds = line_data({0.0, 2.0});
    CHECK_THROWS_AS(surrogate_minimize(all_to(3, 1, 0), ds, {{0.0}}, l1), ContractViolation);
  }
}

TEST_CASE("surrogate_minimize: medoid is the best record by brute force") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    Dataset ds = gen::dataset(rng, 25, 3);
    MMConfig cfg;
    cfg.update = UpdateRule::Medoid;
    if (t % 2) cfg.metric.kind = MetricKind::SqL2;
    const std::size_t m = 3;
    TransportPlan plan;
    plan.n = ds.n();
    plan.m = m;
    for (std::size_t i = 0; i < ds.n(); ++i) plan.assignment.push_back(static_cast<Eigen::Index>(rng() % m));
    Centroids start(m, std::vector<double>(3, 0.0));
    auto next = surrogate_minimize(plan, ds, start, cfg);
    for (std::size_t j = 0; j < m; ++j) {
      auto obj = [&](const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < ds.n(); ++i)
          if (plan.assignment[i] == static_cast<Eigen::Index>(j)) s += feature_distance(ds.records[i].x, c, cfg.metric.kind);
        return s;
      };
      double best = obj(start[j]);
      for (const auto& r : ds.records) best = std::min(best, obj(r.x));
      CHECK(obj(next[j]) == doctest::Approx(best).epsilon(1e-12));
      bool is_record = next[j] == start[j];
      for (const auto& r : ds.records) is_record = is_record || r.x == next[j];
      CHECK(is_record);
    }
  }
}

TEST_CASE("initialize: one point per slot, inside its combo") {
  std::mt19937_64 rng(5);
  Dataset ds = gen::dataset(rng, 200, 2);
  ComboAllocation alloc = allocate_combos(ds, 12);
  MMConfig cfg;
  bool padded = true;
  Centroids init = initialize(ds, alloc, cfg, &padded);
  CHECK(init.size() == 12);
  CHECK_FALSE(padded);
  CHECK(initialize(ds, alloc, cfg) == init);

  cfg.update = UpdateRule::Medoid;
  Centroids snapped = initialize(ds, alloc, cfg);
  auto labels = alloc.point_labels();
  for (std::size_t j = 0; j < snapped.size(); ++j) {
    bool found = false;
    for (const auto& r : ds.records)
      found = found || (r.x == snapped[j] && r.d == labels[j].d && r.y == labels[j].y);
    CHECK(found);
  }
}

TEST_CASE("initialize: single-point combo gets the combo mean; padding duplicates") {
  Dataset ds = line_data({1.0, 2.0, 6.0});
  ComboAllocation alloc;
  alloc.num_d = 1;
  alloc.num_y = 1;
  alloc.counts[{0, 0}] = 1;
  MMConfig cfg;
  CHECK(initialize(ds, alloc, cfg)[0][0] == doctest::Approx(3.0));
  alloc.counts[{0, 0}] = 5;
  bool padded = false;
  Centroids init = initialize(ds, alloc, cfg, &padded);
  CHECK(padded);
  CHECK(init.size() == 5);
}

TEST_CASE("run: m = n reconstructs the data") {
  std::mt19937_64 rng(8);
  Dataset ds = gen::dataset(rng, 16, 2);
  MMConfig cfg;
  MMResult res = run(ds, ds.n(), std::nullopt, cfg);
  CHECK(res.report.objective_trace.back() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.report.success());
  for (double w : res.coreset.weights) CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("run: contract and boundary errors") {
  std::mt19937_64 rng(9);
  Dataset ds = gen::dataset(rng, 30, 2);
  MMConfig cfg;
  CHECK_THROWS_AS(run(ds, 2, FairnessConfig{0.05, {}}, cfg), InfeasibleSizeError);
  cfg.update = UpdateRule::Mean;
  CHECK_THROWS_AS(run(ds, 5, std::nullopt, cfg), InvalidSpecError);
}

TEST_CASE("run: constrained output meets epsilon and weights sum to m") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 6; ++t) {
    SyntheticSpec spec;
    spec.n = 400;
    spec.p = 2;
    spec.seed = static_cast<std::uint64_t>(t);
    Dataset ds = generate_synthetic(spec);
    MMConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    if (t % 2) {
      cfg.metric.kind = MetricKind::SqL2;
      cfg.update = UpdateRule::Mean;
    }
    const std::size_t m = 20;
    MMResult res = run(ds, m, FairnessConfig{0.01, {}}, cfg);
    CHECK(res.report.success());
    CHECK(res.coreset.size() == m);
    double total = 0.0;
    for (double w : res.coreset.weights) {
      CHECK(w >= -1e-12);
      total += w;
    }
    CHECK(total == doctest::Approx(static_cast<double>(m)).epsilon(1e-9));
    CHECK(res.report.disparity.value <= 0.01 + 1e-6);
    CHECK(res.report.constrained);
    const auto& tr = res.report.objective_trace;
    for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr[k] <= tr[k - 1] + 1e-9 * std::abs(tr[k - 1]));
    for (const auto& d : res.report.diagnostics) CHECK(d.surrogate_next <= d.objective + 1e-9 * (1 + std::abs(d.objective)));
  }
}

TEST_CASE("run_from without constraints follows Lloyd with fixed labels") {
  std::mt19937_64 rng(12);
  Dataset ds = gen::dataset(rng, 150, 2);
  ComboAllocation alloc = allocate_combos(ds, 8);
  for (int mode = 0; mode < 2; ++mode) {
    MMConfig cfg;
    if (mode == 0) {
      cfg.metric = {MetricKind::SqL2, 1.0};
      cfg.update = UpdateRule::Mean;
    }
    cfg.tol_objective = 0.0;
    cfg.record_history = true;
    Centroids init = initialize(ds, alloc, cfg);
    MMResult mm = run_from(ds, alloc, init, std::nullopt, cfg);

    LloydConfig lc;
    lc.k = init.size();
    lc.metric = cfg.metric;
    lc.update = cfg.update;
    lc.labels = alloc.point_labels();
    lc.initial_centroids = init;
    lc.record_history = true;
    LloydResult ll = lloyd(ds, lc);

    std::size_t steps = std::min(mm.report.assignment_history.size(), ll.assignment_history.size());
    CHECK(steps >= 2);
    for (std::size_t k = 0; k < steps; ++k) CHECK(mm.report.assignment_history[k] == ll.assignment_history[k]);
  }
}

TEST_CASE("reseed_empty keeps descent and moves dead columns") {
  // Two far clusters, all initial points in the first one.
  Dataset ds = line_data({0.0, 0.1, 0.2, 100.0, 100.1});
  ComboAllocation alloc;
  alloc.num_d = 1;
  alloc.num_y = 1;
  alloc.counts[{0, 0}] = 2;
  MMConfig cfg;
  Centroids init = {{0.1}, {-50.0}};
  MMResult stale = run_from(ds, alloc, init, std::nullopt, cfg);
  cfg.reseed_empty = true;
  MMResult moved = run_from(ds, alloc, init, std::nullopt, cfg);
  CHECK(moved.report.objective_trace.back() < stale.report.objective_trace.back());
  const auto& tr = moved.report.objective_trace;
  for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr[k] <= tr[k - 1] + 1e-12);
}

TEST_CASE("run: degenerate outcome target reports infeasible") {
  Dataset ds;
  ds.feature_names = {"f"};
  ds.d_levels = {"a", "b"};
  ds.y_levels = {"0", "1"};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 40; ++i) ds.records.push_back({i % 2, {nd(rng)}, (i / 2) % 2});
  MMConfig cfg;
  MMResult res = run(ds, 8, FairnessConfig{0.05, TargetDistribution{{0.5, 0.5}}}, cfg);
  CHECK(res.report.success());
  CHECK(res.report.disparity.value <= 0.05 + 1e-6);
}
