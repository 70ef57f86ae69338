#include "fwc/cost.hpp"

#include <cmath>

#include "fwc/errors.hpp"
#include "fwc/parallel.hpp"

namespace fwc {

const char* to_string(MetricKind kind) { return kind == MetricKind::L1 ? "l1" : "sql2"; }

MetricKind parse_metric(const std::string& text) {
  if (text == "l1" || text == "L1") return MetricKind::L1;
  if (text == "sql2" || text == "SqL2") return MetricKind::SqL2;
  throw ContractViolation("unknown metric '" + text + "' (expected l1 or sql2)");
}

double feature_distance(std::span<const double> x, std::span<const double> xh, MetricKind kind) {
  if (x.size() != xh.size()) throw ContractViolation("feature dimension mismatch in cost");
  double s = 0.0;
  if (kind == MetricKind::L1) {
    for (std::size_t k = 0; k < x.size(); ++k) s += std::abs(x[k] - xh[k]);
  } else {
    for (std::size_t k = 0; k < x.size(); ++k) {
      double g = x[k] - xh[k];
      s += g * g;
    }
  }
  return s;
}

double pair_cost(const Record& z, const Record& zhat, const CostMetric& metric) {
  double mismatches = (z.d != zhat.d ? 1.0 : 0.0) + (z.y != zhat.y ? 1.0 : 0.0);
  return feature_distance(z.x, zhat.x, metric.kind) + metric.cat_penalty * mismatches;
}

CostMatrix build_cost_matrix(const Dataset& dataset, std::span<const Record> points,
                             const CostMetric& metric) {
  if (dataset.records.empty() || points.empty())
    throw ContractViolation("cost matrix needs a nonempty dataset and coreset");
  if (metric.cat_penalty < 0.0) throw ContractViolation("cat_penalty must be nonnegative");
  const std::size_t n = dataset.n();
  const std::size_t m = points.size();
  CostMatrix cm;
  cm.metric = metric;
  cm.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (const auto& pt : points)
    if (pt.x.size() != dataset.p()) throw ContractViolation("feature dimension mismatch in cost");
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Record& z = dataset.records[i];
      double* row = cm.values.row(static_cast<Eigen::Index>(i)).data();
      for (std::size_t j = 0; j < m; ++j) row[j] = pair_cost(z, points[j], metric);
    }
  });
  return cm;
}

void update_cost_columns(RowMatrix& values, const Dataset& dataset,
                         std::span<const Record> points, const CostMetric& metric,
                         std::span<const std::size_t> cols) {
  if (values.rows() != static_cast<Eigen::Index>(dataset.n()) ||
      values.cols() != static_cast<Eigen::Index>(points.size()))
    throw ContractViolation("cost matrix shape mismatch in column update");
  if (cols.empty()) return;
  for (std::size_t j : cols) {
    if (j >= points.size()) throw ContractViolation("cost column out of range");
    if (points[j].x.size() != dataset.p()) throw ContractViolation("feature dimension mismatch in cost");
  }
  parallel_for(dataset.n(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Record& z = dataset.records[i];
      double* row = values.row(static_cast<Eigen::Index>(i)).data();
      for (std::size_t j : cols) row[j] = pair_cost(z, points[j], metric);
    }
  });
}

std::vector<RowMax> row_argmax(const RowMatrix& adjusted) {
  if (adjusted.rows() == 0 || adjusted.cols() == 0)
    throw ContractViolation("row_argmax on an empty matrix");
  std::vector<RowMax> out(static_cast<std::size_t>(adjusted.rows()));
  for (Eigen::Index i = 0; i < adjusted.rows(); ++i) {
    RowMax best{0, adjusted(i, 0)};
    for (Eigen::Index j = 1; j < adjusted.cols(); ++j)
      if (adjusted(i, j) > best.value) best = {j, adjusted(i, j)};
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace fwc
