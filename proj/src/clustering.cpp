#include "fwc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "fwc/errors.hpp"

namespace fwc {

const char* to_string(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::Mean: return "mean";
    case UpdateRule::CoordinateMedian: return "median";
    case UpdateRule::Medoid: return "medoid";
  }
  return "?";
}

UpdateRule parse_update(const std::string& text) {
  if (text == "mean") return UpdateRule::Mean;
  if (text == "median" || text == "coordinate_median") return UpdateRule::CoordinateMedian;
  if (text == "medoid") return UpdateRule::Medoid;
  throw ContractViolation("unknown update rule '" + text + "' (expected mean, median or medoid)");
}

double weighted_lower_median(std::vector<std::pair<double, double>> vw) {
  if (vw.empty()) throw ContractViolation("median of an empty set");
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& [v, w] : vw) total += w;
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.back().first;
}

std::vector<std::size_t> kmeanspp_indices(std::span<const Record> records, std::size_t k,
                                          std::uint64_t seed) {
  const std::size_t n = records.size();
  if (k == 0 || k > n) throw ContractViolation("k-means++ needs 1 <= k <= n");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  std::vector<char> taken(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto pick_uniform_untaken = [&] {
    std::size_t remaining = n - chosen.size();
    std::uniform_int_distribution<std::size_t> u(0, remaining - 1);
    std::size_t target = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (target-- == 0) return i;
    }
    return n - 1;
  };
  auto take = [&](std::size_t idx) {
    chosen.push_back(idx);
    taken[idx] = 1;
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], feature_distance(records[i].x, records[idx].x, MetricKind::SqL2));
  };

  take(pick_uniform_untaken());
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i]) total += d2[i];
    if (!(total > 0.0)) {
      // Only duplicates of chosen points remain.
      take(pick_uniform_untaken());
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t pick = n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i] || d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    take(pick);
  }
  return chosen;
}

Centroids kmeanspp_seed(std::span<const Record> records, std::size_t k, std::uint64_t seed) {
  Centroids out;
  for (std::size_t idx : kmeanspp_indices(records, k, seed)) out.push_back(records[idx].x);
  return out;
}

namespace {

double assign_cost(const Record& r, const std::vector<double>& c, const LloydConfig& cfg,
                   std::size_t j) {
  double cost = feature_distance(r.x, c, cfg.metric.kind);
  if (cfg.labels) {
    const ComboLabel& l = (*cfg.labels)[j];
    cost += cfg.metric.cat_penalty * ((r.d != l.d ? 1.0 : 0.0) + (r.y != l.y ? 1.0 : 0.0));
  }
  return cost;
}

std::vector<double> update_centroid(const Dataset& ds, const std::vector<std::size_t>& members,
                                    const LloydConfig& cfg) {
  const std::size_t p = ds.p();
  std::vector<double> c(p, 0.0);
  switch (cfg.update) {
    case UpdateRule::Mean: {
      for (std::size_t i : members)
        for (std::size_t k = 0; k < p; ++k) c[k] += ds.records[i].x[k];
      for (double& v : c) v /= static_cast<double>(members.size());
      break;
    }
    case UpdateRule::CoordinateMedian: {
      for (std::size_t k = 0; k < p; ++k) {
        std::vector<std::pair<double, double>> vw;
        vw.reserve(members.size());
        for (std::size_t i : members) vw.emplace_back(ds.records[i].x[k], 1.0);
        c[k] = weighted_lower_median(std::move(vw));
      }
      break;
    }
    case UpdateRule::Medoid: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t cand : members) {
        double s = 0.0;
        for (std::size_t i : members)
          s += feature_distance(ds.records[i].x, ds.records[cand].x, cfg.metric.kind);
        if (s < best) {
          best = s;
          c = ds.records[cand].x;
        }
      }
      break;
    }
  }
  return c;
}

}  // namespace

LloydResult lloyd(const Dataset& dataset, const LloydConfig& cfg) {
  const std::size_t n = dataset.n();
  if (cfg.k < 1) throw ContractViolation("lloyd needs k >= 1");
  if (cfg.k > n) throw ContractViolation("lloyd needs k <= n");
  if (cfg.labels && cfg.labels->size() != cfg.k)
    throw ContractViolation("lloyd: one label per centroid required");

  LloydResult res;
  res.centroids = cfg.initial_centroids ? *cfg.initial_centroids
                                        : kmeanspp_seed(dataset.records, cfg.k, cfg.seed);
  if (res.centroids.size() != cfg.k) throw ContractViolation("lloyd: wrong number of centroids");
  for (const auto& c : res.centroids)
    if (c.size() != dataset.p()) throw ContractViolation("lloyd: centroid dimension mismatch");

  std::vector<std::size_t> prev;
  for (int it = 0; it < cfg.max_iters; ++it) {
    res.iterations = it + 1;
    res.assignments.assign(n, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_cost = assign_cost(dataset.records[i], res.centroids[0], cfg, 0);
      for (std::size_t j = 1; j < cfg.k; ++j) {
        double c = assign_cost(dataset.records[i], res.centroids[j], cfg, j);
        if (c < best_cost) {
          best_cost = c;
          best = j;
        }
      }
      res.assignments[i] = best;
      total += best_cost;
    }
    res.cost_trace.push_back(total);
    if (cfg.record_history) {
      res.assignment_history.push_back(res.assignments);
      res.centroid_history.push_back(res.centroids);
    }
    if (it > 0 && res.assignments == prev) {
      res.converged = true;
      break;
    }
    prev = res.assignments;

    std::vector<std::vector<std::size_t>> members(cfg.k);
    for (std::size_t i = 0; i < n; ++i) members[res.assignments[i]].push_back(i);
    Centroids next = res.centroids;
    double movement = 0.0;
    for (std::size_t j = 0; j < cfg.k; ++j) {
      if (members[j].empty()) continue;  // stale centroid
      next[j] = update_centroid(dataset, members[j], cfg);
      for (std::size_t k = 0; k < dataset.p(); ++k)
        movement = std::max(movement, std::abs(next[j][k] - res.centroids[j][k]));
    }
    if (movement <= cfg.tol) {
      res.converged = true;
      break;
    }
    res.centroids = std::move(next);
  }
  return res;
}

Coreset uniform_subsample(const Dataset& dataset, std::size_t m, std::uint64_t seed) {
  if (m > dataset.n())
    throw BoundaryError("cannot subsample m=" + std::to_string(m) + " from n=" +
                        std::to_string(dataset.n()) + " records");
  std::vector<std::size_t> idx(dataset.n());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  Coreset cs;
  for (std::size_t j = 0; j < m; ++j) {
    cs.points.push_back(dataset.records[idx[j]]);
    cs.weights.push_back(1.0);
  }
  return cs;
}

Coreset coreset_from_clusters(const Dataset& dataset, const LloydResult& result) {
  const std::size_t k = result.centroids.size();
  std::vector<std::map<ComboLabel, std::size_t>> votes(k);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    const Record& r = dataset.records[i];
    ++votes[result.assignments[i]][{r.d, r.y}];
    ++sizes[result.assignments[i]];
  }
  Coreset cs;
  for (std::size_t j = 0; j < k; ++j) {
    ComboLabel label{0, 0};
    std::size_t best = 0;
    for (const auto& [combo, c] : votes[j])
      if (c > best) {
        best = c;
        label = combo;
      }
    cs.points.push_back({label.d, result.centroids[j], label.y});
    cs.weights.push_back(static_cast<double>(k) * static_cast<double>(sizes[j]) /
                         static_cast<double>(dataset.n()));
  }
  return cs;
}

}  // namespace fwc
