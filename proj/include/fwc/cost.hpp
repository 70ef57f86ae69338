#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "fwc/dataio.hpp"

namespace fwc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MetricKind { L1, SqL2 };

// Ground cost on (d, x, y). Each mismatched categorical coordinate adds
// cat_penalty.
struct CostMetric {
  MetricKind kind = MetricKind::L1;
  double cat_penalty = 1.0;
};

const char* to_string(MetricKind kind);
MetricKind parse_metric(const std::string& text);

// Feature part only.
double feature_distance(std::span<const double> x, std::span<const double> xh, MetricKind kind);

double pair_cost(const Record& z, const Record& zhat, const CostMetric& metric);

// Dense n x m matrix of pair costs, immutable once built.
struct CostMatrix {
  RowMatrix values;
  CostMetric metric;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

CostMatrix build_cost_matrix(const Dataset& dataset, std::span<const Record> points,
                             const CostMetric& metric);

// Recompute only columns `cols` of `values` (n x points.size()) in place.
void update_cost_columns(RowMatrix& values, const Dataset& dataset,
                         std::span<const Record> points, const CostMetric& metric,
                         std::span<const std::size_t> cols);

struct RowMax {
  Eigen::Index column;
  double value;
};

// Per row, the maximal entry and the smallest column index attaining it.
std::vector<RowMax> row_argmax(const RowMatrix& adjusted);

}  // namespace fwc
