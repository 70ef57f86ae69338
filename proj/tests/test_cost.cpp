#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fwc/cost.hpp"
#include "fwc/errors.hpp"
#include "support/generators.hpp"

using namespace fwc;

TEST_CASE("pair_cost examples") {
  Record z{0, {0.0, 0.0}, 1};
  CHECK(pair_cost(z, z, {MetricKind::L1, 1.0}) == 0.0);
  CHECK(pair_cost(z, Record{0, {3.0, 4.0}, 1}, {MetricKind::SqL2, 1.0}) == 25.0);
  CHECK(pair_cost(z, Record{1, {1.0, 1.0}, 1}, {MetricKind::L1, 2.0}) == 4.0);
  CHECK(pair_cost(z, Record{1, {0.0, 0.0}, 0}, {MetricKind::SqL2, 0.5}) == 1.0);
  CHECK_THROWS_AS(pair_cost(z, Record{0, {1.0}, 1}, {}), ContractViolation);
}

TEST_CASE("metric names") {
  CHECK(parse_metric("l1") == MetricKind::L1);
  CHECK(parse_metric("sql2") == MetricKind::SqL2);
  CHECK(std::string(to_string(MetricKind::SqL2)) == "sql2");
  CHECK_THROWS(parse_metric("l7"));
}

TEST_CASE("build_cost_matrix") {
  std::mt19937_64 rng(2);
  Dataset one = gen::dataset(rng, 1, 2, 1, 1);
  CostMatrix cm = build_cost_matrix(one, one.records, {});
  CHECK(cm.rows() == 1);
  CHECK(cm(0, 0) == 0.0);

  for (int t = 0; t < 10; ++t) {
    Dataset ds = gen::dataset(rng, 2 + rng() % 8, 3);
    std::vector<Record> pts(ds.records.begin(), ds.records.begin() + 2);
    pts[1].x[0] += 0.7;
    for (MetricKind kind : {MetricKind::L1, MetricKind::SqL2}) {
      CostMetric metric{kind, 0.8};
      CostMatrix c = build_cost_matrix(ds, pts, metric);
      for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < 2; ++j) {
          // independent recomputation
          const auto& a = ds.records[i].x;
          const auto& b = pts[j].x;
          double s = 0.0;
          for (std::size_t k = 0; k < a.size(); ++k)
            s += kind == MetricKind::L1 ? std::abs(a[k] - b[k]) : (a[k] - b[k]) * (a[k] - b[k]);
          s += 0.8 * ((ds.records[i].d != pts[j].d) + (ds.records[i].y != pts[j].y));
          CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
          CHECK(c(i, j) >= 0.0);
        }
      CHECK(c(0, 0) == 0.0);
    }
  }
  CHECK_THROWS_AS(build_cost_matrix(one, std::vector<Record>{}, {}), ContractViolation);
  CHECK_THROWS_AS(build_cost_matrix(one, one.records, {MetricKind::L1, -1.0}), ContractViolation);
}

TEST_CASE("L1 and SqL2 agree only on 0/1 gaps") {
  Dataset ds;
  ds.feature_names = {"a", "b"};
  ds.d_levels = {"0"};
  ds.y_levels = {"0"};
  ds.records = {{0, {0.0, 0.0}, 0}};
  std::vector<Record> unit = {{0, {1.0, 0.0}, 0}, {0, {1.0, 1.0}, 0}};
  std::vector<Record> wide = {{0, {2.0, 0.5}, 0}};
  CHECK(build_cost_matrix(ds, unit, {MetricKind::L1, 1}).values ==
        build_cost_matrix(ds, unit, {MetricKind::SqL2, 1}).values);
  CHECK(build_cost_matrix(ds, wide, {MetricKind::L1, 1}).values !=
        build_cost_matrix(ds, wide, {MetricKind::SqL2, 1}).values);
}

TEST_CASE("update_cost_columns matches a rebuild") {
  std::mt19937_64 rng(9);
  Dataset ds = gen::dataset(rng, 40, 3);
  std::vector<Record> pts(ds.records.begin(), ds.records.begin() + 6);
  CostMetric metric{MetricKind::L1, 1.0};
  RowMatrix C = build_cost_matrix(ds, pts, metric).values;
  pts[1].x[2] += 1.0;
  pts[4].x[0] -= 2.0;
  std::vector<std::size_t> cols = {1, 4};
  update_cost_columns(C, ds, pts, metric, cols);
  CHECK(C == build_cost_matrix(ds, pts, metric).values);
  std::vector<std::size_t> bad = {6};
  CHECK_THROWS_AS(update_cost_columns(C, ds, pts, metric, bad), ContractViolation);
}

TEST_CASE("row_argmax") {
  RowMatrix a(2, 3);
  a << 1, 3, 3, -1, -1, -1;
  auto r = row_argmax(a);
  CHECK(r[0].column == 1);
  CHECK(r[0].value == 3);
  CHECK(r[1].column == 0);
  RowMatrix s(1, 1);
  s << -5;
  CHECK(row_argmax(s)[0].column == 0);
  CHECK(row_argmax(s)[0].value == -5);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> small(0, 3);
  for (int t = 0; t < 50; ++t) {
    RowMatrix m(5, 4);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = small(rng);
    auto out = row_argmax(m);
    for (int i = 0; i < 5; ++i) {
      int best = 0;
      for (int j = 1; j < 4; ++j)
        if (m(i, j) > m(i, best)) best = j;
      CHECK(out[static_cast<std::size_t>(i)].column == best);
    }
  }
  CHECK_THROWS_AS(row_argmax(RowMatrix(0, 0)), ContractViolation);
}

TEST_CASE("cost properties: symmetry, L1 triangle inequality, permutation equivariance") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 2.0);
  auto rec = [&] {
    Record r{static_cast<int>(rng() % 2), {nd(rng), nd(rng), nd(rng)}, static_cast<int>(rng() % 3)};
    return r;
  };
  for (int t = 0; t < 200; ++t) {
    Record a = rec(), b = rec(), c = rec();
    for (MetricKind kind : {MetricKind::L1, MetricKind::SqL2}) {
      CostMetric m{kind, 1.3};
      CHECK(pair_cost(a, b, m) == doctest::Approx(pair_cost(b, a, m)).epsilon(1e-15));
    }
    CostMetric l1{MetricKind::L1, 1.3};
    CHECK(pair_cost(a, c, l1) <= pair_cost(a, b, l1) + pair_cost(b, c, l1) + 1e-12);
  }

  Dataset ds = gen::dataset(rng, 12, 2);
  std::vector<Record> pts(ds.records.begin(), ds.records.begin() + 3);
  RowMatrix C = build_cost_matrix(ds, pts, {}).values;
  std::vector<std::size_t> perm(ds.n());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset shuffled = subset(ds, perm);
  RowMatrix Cp = build_cost_matrix(shuffled, pts, {}).values;
  for (std::size_t i = 0; i < ds.n(); ++i)
    CHECK(Cp.row(static_cast<Eigen::Index>(i)) == C.row(static_cast<Eigen::Index>(perm[i])));
}
