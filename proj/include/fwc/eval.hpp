#pragma once

#include <cstdint>
#include <vector>

#include "fwc/cost.hpp"
#include "fwc/dataio.hpp"
#include "fwc/fairness.hpp"

namespace fwc {

// Finitely supported distribution over (d, x, y) points.
struct DiscreteDistribution {
  std::vector<Record> support;
  std::vector<double> masses;

  // Each record with mass 1/n.
  static DiscreteDistribution empirical(const Dataset& dataset);
  // Coreset point j with mass theta_j / m.
  static DiscreteDistribution weighted(const Coreset& coreset);
  void validate() const;
};

struct CouplingEntry {
  std::size_t from;
  std::size_t to;
  double mass;
};

struct WassersteinResult {
  double distance = 0.0;
  std::vector<CouplingEntry> coupling;
  long pivots = 0;
};

WassersteinResult wasserstein_exact(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                    const CostMetric& metric);

// sum_i min_j ||x_i - xhat_j||^2 plus cat_penalty per mismatched label.
double clustering_cost(const Dataset& dataset, const Coreset& coreset, const CostMetric& metric);

struct ClassifierConfig {
  double lr = 0.5;
  int iters = 1000;
  double l2 = 1e-4;
};

// Logistic regression on [x, onehot(d)] with an intercept. Outcome level 1 is
// the positive class.
struct LogisticModel {
  std::vector<double> coef;
  double intercept = 0.0;
  std::size_t num_d = 0;
  std::vector<double> loss_trace;

  double score(const Record& r) const;  // P(y = 1)
};

// Weighted mean log-loss plus (l2 / 2) ||coef||^2; params = [coef..., intercept].
struct LogisticObjective {
  std::vector<std::vector<double>> design;  // rows [x, onehot(d)]
  std::vector<double> labels;               // 0 / 1
  std::vector<double> weights;              // sum to 1
  double l2 = 0.0;

  LogisticObjective(const Coreset& coreset, std::size_t num_d, double l2);
  std::size_t dim() const { return design.empty() ? 1 : design.front().size() + 1; }
  double loss(const std::vector<double>& params) const;
  std::vector<double> gradient(const std::vector<double>& params) const;
};

// Full-batch gradient descent from zero. Weights theta_j / m. Throws
// DegenerateModelError when one outcome level carries no weight.
LogisticModel train_weighted_classifier(const Coreset& coreset, std::size_t num_d,
                                        const ClassifierConfig& config = {});

// Mann-Whitney AUC with midranks for ties.
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels);

struct DownstreamMetrics {
  double auc = 0.0;
  double dd = 0.0;
};

// AUC of the scores and demographic disparity of the 0.5-threshold predictions.
DownstreamMetrics evaluate_downstream(const LogisticModel& model, const Dataset& holdout);

struct Tradeoff {
  double value = 0.0;
  double sigma = 0.0;
};

// Distance of (dd, auc) from the ideal (0, 1) with first-order error
// propagation. At the ideal point the propagation is undefined and the
// combined sigma hypot(sigma_auc, sigma_dd) is reported.
Tradeoff tradeoff(double auc, double dd, double sigma_auc = 0.0, double sigma_dd = 0.0);

struct EvalReport {
  double wasserstein = 0.0;
  double clustering_cost = 0.0;
  double disparity_J = 0.0;
  double downstream_auc = 0.0;
  double downstream_dd = 0.0;
  double tradeoff = 0.0;
};

struct EvalOptions {
  CostMetric metric;
  ClassifierConfig classifier;
};

// Distribution metrics against `reference`, downstream metrics on `holdout`.
EvalReport evaluate_coreset(const Dataset& reference, const Dataset& holdout, const Coreset& coreset,
                            const TargetDistribution& target, const EvalOptions& options);

// Row indices of a seeded split: first `train_fraction` share, then the rest.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace fwc
