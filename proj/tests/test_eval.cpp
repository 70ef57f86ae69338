#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fwc/errors.hpp"
#include "fwc/eval.hpp"
#include "fwc/mm_driver.hpp"
#include "support/flow_oracle.hpp"
#include "support/generators.hpp"
#include "transport_simplex.hpp"

using namespace fwc;

namespace {

struct RandomPair {
  DiscreteDistribution mu, nu;
  std::vector<std::int64_t> a, b;
  std::int64_t total = 0;
};

// Integer masses so the flow oracle works on exact units.
RandomPair random_pair(std::mt19937_64& rng, std::size_t max_support) {
  RandomPair out;
  std::size_t na = 1 + rng() % max_support, nb = 1 + rng() % max_support;
  std::normal_distribution<double> nd(0.0, 2.0);
  auto point = [&] {
    return Record{static_cast<int>(rng() % 2), {nd(rng), nd(rng)}, static_cast<int>(rng() % 2)};
  };
  out.a.resize(na);
  out.b.resize(nb);
  for (auto& v : out.a) v = 1 + static_cast<std::int64_t>(rng() % 9);
  std::int64_t total = std::accumulate(out.a.begin(), out.a.end(), std::int64_t{0});
  // b: random composition of the same total into nb positive parts when possible
  std::int64_t left = total;
  for (std::size_t j = 0; j < nb; ++j) {
    std::int64_t rest = static_cast<std::int64_t>(nb - j - 1);
    if (j + 1 == nb) {
      out.b[j] = left;
    } else {
      std::int64_t hi = std::max<std::int64_t>(0, left - rest);
      out.b[j] = hi == 0 ? 0 : 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi));
      out.b[j] = std::min(out.b[j], hi);
    }
    left -= out.b[j];
  }
  out.total = total;
  for (std::size_t i = 0; i < na; ++i) {
    out.mu.support.push_back(point());
    out.mu.masses.push_back(static_cast<double>(out.a[i]) / static_cast<double>(total));
  }
  for (std::size_t j = 0; j < nb; ++j) {
    out.nu.support.push_back(point());
    out.nu.masses.push_back(static_cast<double>(out.b[j]) / static_cast<double>(total));
  }
  return out;
}

}  // namespace

TEST_CASE("wasserstein_exact examples") {
  DiscreteDistribution a;
  a.support = {{0, {0.0}, 0}};
  a.masses = {1.0};
  DiscreteDistribution b;
  b.support = {{0, {3.0}, 0}};
  b.masses = {1.0};
  CHECK(wasserstein_exact(a, b, {MetricKind::L1, 1.0}).distance == doctest::Approx(3.0));
  CHECK(wasserstein_exact(a, a, {MetricKind::L1, 1.0}).distance == 0.0);

  std::mt19937_64 rng(4);
  Dataset ds = gen::dataset(rng, 40, 3);
  auto emp = DiscreteDistribution::empirical(ds);
  CHECK(wasserstein_exact(emp, emp, {}).distance == 0.0);
  CHECK_THROWS_AS(wasserstein_exact(DiscreteDistribution{}, a, {}), ContractViolation);
}

TEST_CASE("wasserstein_exact matches min-cost flow") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 100; ++t) {
    RandomPair p = random_pair(rng, 6);
    CostMetric metric{t % 2 ? MetricKind::L1 : MetricKind::SqL2, 0.7};
    std::vector<std::vector<double>> cost(p.mu.support.size(), std::vector<double>(p.nu.support.size()));
    for (std::size_t i = 0; i < cost.size(); ++i)
      for (std::size_t j = 0; j < cost[i].size(); ++j)
        cost[i][j] = pair_cost(p.mu.support[i], p.nu.support[j], metric);
    double ref = oracle::min_cost_transport(p.a, p.b, cost) / static_cast<double>(p.total);
    auto w = wasserstein_exact(p.mu, p.nu, metric);
    CHECK(std::abs(w.distance - ref) <= 1e-8);

    std::vector<double> rows(p.mu.masses.size(), 0.0), cols(p.nu.masses.size(), 0.0);
    for (const auto& e : w.coupling) {
      CHECK(e.mass >= 0.0);
      rows[e.from] += e.mass;
      cols[e.to] += e.mass;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::abs(rows[i] - p.mu.masses[i]) <= 1e-10);
    for (std::size_t j = 0; j < cols.size(); ++j) CHECK(std::abs(cols[j] - p.nu.masses[j]) <= 1e-10);
  }
}

TEST_CASE("wasserstein symmetry and L1 triangle inequality") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.5);
  auto dist = [&](std::size_t k) {
    DiscreteDistribution d;
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      d.support.push_back({static_cast<int>(rng() % 2), {nd(rng), nd(rng)}, static_cast<int>(rng() % 2)});
      d.masses.push_back(0.1 + static_cast<double>(rng() % 10));
      s += d.masses.back();
    }
    for (double& m : d.masses) m /= s;
    return d;
  };
  CostMetric l1{MetricKind::L1, 1.0};
  for (int t = 0; t < 40; ++t) {
    auto a = dist(1 + rng() % 6), b = dist(1 + rng() % 6), c = dist(1 + rng() % 6);
    double ab = wasserstein_exact(a, b, l1).distance;
    CHECK(ab == doctest::Approx(wasserstein_exact(b, a, l1).distance).epsilon(1e-10));
    double ac = wasserstein_exact(a, c, l1).distance;
    double bc = wasserstein_exact(b, c, l1).distance;
    CHECK(ac <= ab + bc + 1e-8);
  }
}

TEST_CASE("transport_simplex: degenerate and rectangular problems") {
  RowMatrix cost(2, 3);
  cost << 1, 2, 3, 4, 1, 2;
  auto s = detail::transport_simplex({0.5, 0.5}, {0.5, 0.0, 0.5}, cost);
  CHECK(s.cost == doctest::Approx(0.5 * 1 + 0.5 * 2));
  RowMatrix one(1, 1);
  one << 7;
  CHECK(detail::transport_simplex({2.0}, {2.0}, one).cost == doctest::Approx(14.0));
}

TEST_CASE("distribution constructors") {
  Coreset cs;
  cs.points = {{0, {0.0}, 0}, {1, {1.0}, 1}};
  cs.weights = {1.5, 0.5};
  auto w = DiscreteDistribution::weighted(cs);
  CHECK(w.masses[0] == doctest::Approx(0.75));
  CHECK_NOTHROW(w.validate());
  DiscreteDistribution bad;
  bad.support = cs.points;
  bad.masses = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("clustering_cost") {
  Dataset ds;
  ds.feature_names = {"f"};
  ds.d_levels = {"0"};
  ds.y_levels = {"0"};
  ds.records = {{0, {0.0}, 0}, {0, {2.0}, 0}};
  Coreset mean;
  mean.points = {{0, {1.0}, 0}};
  mean.weights = {1.0};
  CHECK(clustering_cost(ds, mean, {MetricKind::L1, 1.0}) == doctest::Approx(2.0));
  Coreset same;
  same.points = ds.records;
  same.weights = {1.0, 1.0};
  CHECK(clustering_cost(ds, same, {}) == 0.0);

  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    Dataset r = gen::dataset(rng, 30, 3);
    Coreset cs;
    for (int j = 0; j < 4; ++j) {
      cs.points.push_back(r.records[rng() % r.n()]);
      cs.points.back().x[0] += 0.3;
      cs.weights.push_back(1.0);
    }
    double expect = 0.0;
    for (const auto& z : r.records) {
      double best = 1e300;
      for (const auto& c : cs.points) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) s += (z.x[k] - c.x[k]) * (z.x[k] - c.x[k]);
        s += 0.5 * ((z.d != c.d) + (z.y != c.y));
        best = std::min(best, s);
      }
      expect += best;
    }
    CHECK(clustering_cost(r, cs, {MetricKind::L1, 0.5}) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("classifier: separable toy set is fit exactly") {
  Coreset cs;
  for (int i = 0; i < 10; ++i) {
    double x = i < 5 ? -1.0 - i : 1.0 + i;
    cs.points.push_back({i % 2, {x, 0.3 * i}, i < 5 ? 0 : 1});
    cs.weights.push_back(1.0);
  }
  LogisticModel model = train_weighted_classifier(cs, 2, {0.5, 2000, 1e-4});
  for (const auto& p : cs.points) CHECK((model.score(p) > 0.5) == (p.y == 1));
  for (std::size_t k = 1; k < model.loss_trace.size(); ++k)
    CHECK(model.loss_trace[k] <= model.loss_trace[k - 1] + 1e-15);
}

TEST_CASE("classifier: two weighted points give a bisector direction") {
  Coreset cs;
  cs.points = {{0, {-1.0, -1.0}, 0}, {0, {1.0, 1.0}, 1}, {0, {10.0, -10.0}, 1}};
  cs.weights = {1.0, 1.0, 0.0};
  LogisticModel model = train_weighted_classifier(cs, 1);
  // Symmetric pair: coefficients along (1, 1), intercept stays at 0.
  CHECK(std::abs(model.intercept) < 1e-12);
  CHECK(model.coef[0] > 0.0);
  CHECK(model.coef[1] > 0.0);
  CHECK(model.coef[0] == doctest::Approx(model.coef[1]).epsilon(1e-6));
}

TEST_CASE("logistic gradient matches finite differences") {
  std::mt19937_64 rng(10);
  Dataset ds = gen::dataset(rng, 20, 3);
  Coreset cs;
  for (const auto& r : ds.records) {
    cs.points.push_back(r);
    cs.weights.push_back(0.5 + static_cast<double>(rng() % 5));
  }
  LogisticObjective obj(cs, ds.num_d(), 1e-2);
  std::vector<double> params(obj.dim());
  std::normal_distribution<double> nd(0.0, 0.5);
  for (double& v : params) v = nd(rng);
  for (std::vector<double> at : {std::vector<double>(obj.dim(), 0.0), params}) {
    auto g = obj.gradient(at);
    for (std::size_t k = 0; k < at.size(); ++k) {
      auto up = at, down = at;
      const double h = 1e-6;
      up[k] += h;
      down[k] -= h;
      double fd = (obj.loss(up) - obj.loss(down)) / (2 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
    }
  }
  Coreset single;
  single.points = {{0, {1.0, 0.0, 0.0}, 1}};
  single.weights = {1.0};
  CHECK_THROWS_AS(train_weighted_classifier(single, 2), DegenerateModelError);
}

TEST_CASE("auc_score") {
  CHECK(auc_score({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(auc_score({0.5, 0.5}, {0, 1}) == 0.5);
  CHECK_THROWS_AS(auc_score({0.1, 0.2}, {1, 1}), DegenerateGroupError);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> s(25);
    std::vector<int> l(25);
    for (int i = 0; i < 25; ++i) {
      s[i] = static_cast<double>(rng() % 7);  // plenty of ties
      l[i] = i < 2 ? i : static_cast<int>(rng() % 2);
    }
    double wins = 0, pairs = 0;
    for (int i = 0; i < 25; ++i)
      for (int j = 0; j < 25; ++j)
        if (l[i] == 1 && l[j] == 0) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    CHECK(auc_score(s, l) == doctest::Approx(wins / pairs).epsilon(1e-14));
  }
}

TEST_CASE("evaluate_downstream: group-blind symmetric holdout has DD 0") {
  Coreset cs;
  cs.points = {{0, {-1.0}, 0}, {0, {1.0}, 1}, {1, {-1.0}, 0}, {1, {1.0}, 1}};
  cs.weights = {1, 1, 1, 1};
  LogisticModel model = train_weighted_classifier(cs, 2);
  Dataset h;
  h.feature_names = {"f"};
  h.d_levels = {"a", "b"};
  h.y_levels = {"0", "1"};
  h.records = {{0, {-2.0}, 0}, {0, {2.0}, 1}, {1, {-2.0}, 0}, {1, {2.0}, 1}};
  DownstreamMetrics dm = evaluate_downstream(model, h);
  CHECK(dm.auc == 1.0);
  CHECK(dm.dd == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tradeoff") {
  CHECK(tradeoff(1.0, 0.0).value == 0.0);
  CHECK(tradeoff(0.5, 0.0).value == 0.5);
  CHECK(tradeoff(0.8, 0.3).value == doctest::Approx(std::sqrt(0.13)));
  Tradeoff t = tradeoff(0.8, 0.3, 0.02, 0.01);
  double tv = std::sqrt(0.13);
  double expect = std::sqrt(std::pow(0.3 / tv * 0.01, 2) + std::pow(-0.2 / tv * 0.02, 2));
  CHECK(t.sigma == doctest::Approx(expect));
  CHECK(tradeoff(1.0, 0.0, 0.03, 0.04).sigma == doctest::Approx(0.05));
}

TEST_CASE("train_test_split") {
  auto [tr, te] = train_test_split(100, 0.75, 3);
  CHECK(tr.size() == 75);
  CHECK(te.size() == 25);
  std::vector<std::size_t> all = tr;
  all.insert(all.end(), te.begin(), te.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == i);
  auto again = train_test_split(100, 0.75, 3);
  CHECK(again.first == tr);
  CHECK(train_test_split(100, 0.75, 4).first != tr);
}

TEST_CASE("converged output: W equals F without constraints and F >= W with them") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 4; ++t) {
    Dataset ds = gen::dataset(rng, 120, 2);
    MMConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    auto emp = DiscreteDistribution::empirical(ds);

    MMResult free = run(ds, 8, std::nullopt, cfg);
    double W = wasserstein_exact(DiscreteDistribution::weighted(free.coreset), emp, cfg.metric).distance;
    CHECK(W == doctest::Approx(free.report.objective_trace.back()).epsilon(1e-9));

    MMResult fair = run(ds, 8, FairnessConfig{0.01, {}}, cfg);
    double Wf = wasserstein_exact(DiscreteDistribution::weighted(fair.coreset), emp, cfg.metric).distance;
    CHECK(fair.report.objective_trace.back() >= Wf - 1e-9);
  }
}

TEST_CASE("evaluate_coreset report fields") {
  std::mt19937_64 rng(3);
  Dataset ds = gen::dataset(rng, 200, 2);
  MMConfig cfg;
  MMResult res = run(ds, 10, FairnessConfig{0.05, {}}, cfg);
  EvalOptions opt;
  EvalReport rep = evaluate_coreset(ds, ds, res.coreset, TargetDistribution::empirical(ds), opt);
  CHECK(rep.wasserstein >= 0.0);
  CHECK(rep.clustering_cost >= 0.0);
  CHECK(rep.disparity_J <= 0.05 + 1e-6);
  CHECK(rep.tradeoff == doctest::Approx(std::hypot(1 - rep.downstream_auc, rep.downstream_dd)));
}
