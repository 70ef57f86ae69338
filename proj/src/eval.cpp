#include "fwc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fwc/errors.hpp"
#include "fwc/parallel.hpp"
#include "transport_simplex.hpp"

namespace fwc {

DiscreteDistribution DiscreteDistribution::empirical(const Dataset& dataset) {
  if (dataset.n() == 0) throw EmptyDatasetError("dataset has no records");
  DiscreteDistribution d;
  d.support = dataset.records;
  d.masses.assign(dataset.n(), 1.0 / static_cast<double>(dataset.n()));
  return d;
}

DiscreteDistribution DiscreteDistribution::weighted(const Coreset& coreset) {
  if (coreset.size() == 0) throw ContractViolation("empty coreset");
  DiscreteDistribution d;
  d.support = coreset.points;
  const double total = std::accumulate(coreset.weights.begin(), coreset.weights.end(), 0.0);
  if (!(total > 0.0)) throw ContractViolation("coreset weights sum to zero");
  for (double w : coreset.weights) d.masses.push_back(w / total);
  return d;
}

void DiscreteDistribution::validate() const {
  if (support.empty()) throw ContractViolation("distribution with empty support");
  if (support.size() != masses.size()) throw ContractViolation("support and masses differ in length");
  double total = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0)) throw ContractViolation("negative or NaN mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("masses do not sum to 1");
}

WassersteinResult wasserstein_exact(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                    const CostMetric& metric) {
  mu.validate();
  nu.validate();
  const auto M = static_cast<Eigen::Index>(mu.support.size());
  const auto N = static_cast<Eigen::Index>(nu.support.size());
  RowMatrix C(M, N);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (Eigen::Index j = 0; j < N; ++j)
        C(static_cast<Eigen::Index>(i), j) =
            pair_cost(mu.support[i], nu.support[static_cast<std::size_t>(j)], metric);
  });
  // Balance the two sides exactly; they agree to within validate()'s slack.
  std::vector<double> a = mu.masses, b = nu.masses;
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  for (double& v : b) v *= sa / sb;

  detail::TransportSolution sol = detail::transport_simplex(a, b, C);
  WassersteinResult out;
  out.distance = sol.cost;
  out.pivots = sol.pivots;
  for (const auto& f : sol.flows) out.coupling.push_back({f.from, f.to, f.mass});
  return out;
}

double clustering_cost(const Dataset& dataset, const Coreset& coreset, const CostMetric& metric) {
  if (coreset.size() == 0) throw ContractViolation("empty coreset");
  CostMetric sq{MetricKind::SqL2, metric.cat_penalty};
  std::vector<double> best(dataset.n());
  parallel_for(dataset.n(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (const Record& pt : coreset.points) m = std::min(m, pair_cost(dataset.records[i], pt, sq));
      best[i] = m;
    }
  });
  return std::accumulate(best.begin(), best.end(), 0.0);
}

namespace {

std::vector<double> design_row(const Record& r, std::size_t num_d) {
  std::vector<double> z = r.x;
  for (std::size_t k = 0; k < num_d; ++k) z.push_back(r.d == static_cast<int>(k) ? 1.0 : 0.0);
  return z;
}

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

LogisticObjective::LogisticObjective(const Coreset& coreset, std::size_t num_d, double l2_)
    : l2(l2_) {
  const double total = std::accumulate(coreset.weights.begin(), coreset.weights.end(), 0.0);
  if (!(total > 0.0)) throw DegenerateModelError("coreset weights sum to zero");
  double pos = 0.0, neg = 0.0;
  for (std::size_t j = 0; j < coreset.size(); ++j) {
    design.push_back(design_row(coreset.points[j], num_d));
    labels.push_back(coreset.points[j].y == 1 ? 1.0 : 0.0);
    weights.push_back(coreset.weights[j] / total);
    (coreset.points[j].y == 1 ? pos : neg) += coreset.weights[j];
  }
  if (!(pos > 0.0) || !(neg > 0.0))
    throw DegenerateModelError("classifier needs positive weight on both outcome levels");
}

double LogisticObjective::loss(const std::vector<double>& w) const {
  const std::size_t d = dim() - 1;
  double s = 0.0;
  for (std::size_t j = 0; j < design.size(); ++j) {
    double t = w[d];
    for (std::size_t k = 0; k < d; ++k) t += w[k] * design[j][k];
    s += weights[j] * (softplus(t) - labels[j] * t);
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < d; ++k) reg += w[k] * w[k];
  return s + 0.5 * l2 * reg;
}

std::vector<double> LogisticObjective::gradient(const std::vector<double>& w) const {
  const std::size_t d = dim() - 1;
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t j = 0; j < design.size(); ++j) {
    double t = w[d];
    for (std::size_t k = 0; k < d; ++k) t += w[k] * design[j][k];
    const double r = weights[j] * (sigmoid(t) - labels[j]);
    for (std::size_t k = 0; k < d; ++k) g[k] += r * design[j][k];
    g[d] += r;
  }
  for (std::size_t k = 0; k < d; ++k) g[k] += l2 * w[k];
  return g;
}

double LogisticModel::score(const Record& r) const {
  std::vector<double> z = design_row(r, num_d);
  if (z.size() != coef.size()) throw ContractViolation("record does not match the model's features");
  double t = intercept;
  for (std::size_t k = 0; k < z.size(); ++k) t += coef[k] * z[k];
  return sigmoid(t);
}

LogisticModel train_weighted_classifier(const Coreset& coreset, std::size_t num_d,
                                        const ClassifierConfig& config) {
  LogisticObjective obj(coreset, num_d, config.l2);
  const std::size_t dim = obj.dim();
  // Curvature bound of the weighted log-loss: 1/4 max ||[z, 1]||^2 + l2.
  double zmax = 0.0;
  for (const auto& z : obj.design) {
    double s = 1.0;
    for (double v : z) s += v * v;
    zmax = std::max(zmax, s);
  }
  const double lip = 0.25 * zmax + config.l2;
  const double step = std::min(config.lr, 1.0 / lip);

  std::vector<double> w(dim, 0.0);
  LogisticModel model;
  model.num_d = num_d;
  model.loss_trace.push_back(obj.loss(w));
  for (int it = 0; it < config.iters; ++it) {
    std::vector<double> g = obj.gradient(w);
    for (std::size_t k = 0; k < dim; ++k) w[k] -= step * g[k];
    model.loss_trace.push_back(obj.loss(w));
  }
  model.coef.assign(w.begin(), w.end() - 1);
  model.intercept = w.back();
  return model;
}

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ContractViolation("scores and labels differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && scores[idx[e + 1]] == scores[idx[s]]) ++e;
    const double mid = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t k = s; k <= e; ++k) rank[idx[k]] = mid;
    s = e + 1;
  }
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    } else {
      neg += 1.0;
    }
  }
  if (pos == 0.0 || neg == 0.0) throw DegenerateGroupError("AUC needs both outcome levels in the holdout");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

DownstreamMetrics evaluate_downstream(const LogisticModel& model, const Dataset& holdout) {
  if (holdout.n() == 0) throw DegenerateGroupError("empty holdout");
  std::vector<double> scores;
  std::vector<int> labels, preds, groups;
  for (const Record& r : holdout.records) {
    double s = model.score(r);
    scores.push_back(s);
    labels.push_back(r.y == 1 ? 1 : 0);
    preds.push_back(s >= 0.5 ? 1 : 0);
    groups.push_back(r.d);
  }
  DownstreamMetrics out;
  out.auc = auc_score(scores, labels);
  out.dd = demographic_disparity(preds, groups);
  return out;
}

Tradeoff tradeoff(double auc, double dd, double sigma_auc, double sigma_dd) {
  if (!(auc >= 0.0 && auc <= 1.0)) throw ContractViolation("auc must lie in [0, 1]");
  if (!(dd >= 0.0)) throw ContractViolation("dd must be >= 0");
  Tradeoff t;
  t.value = std::hypot(1.0 - auc, dd);
  if (t.value == 0.0) {
    t.sigma = std::hypot(sigma_auc, sigma_dd);
  } else {
    t.sigma = std::hypot(dd / t.value * sigma_dd, (auc - 1.0) / t.value * sigma_auc);
  }
  return t;
}

EvalReport evaluate_coreset(const Dataset& reference, const Dataset& holdout, const Coreset& coreset,
                            const TargetDistribution& target, const EvalOptions& options) {
  EvalReport rep;
  rep.wasserstein = wasserstein_exact(DiscreteDistribution::empirical(reference),
                                      DiscreteDistribution::weighted(coreset), options.metric)
                        .distance;
  rep.clustering_cost = clustering_cost(reference, coreset, options.metric);
  rep.disparity_J = disparity_J(coreset, target).value;
  LogisticModel model = train_weighted_classifier(coreset, reference.num_d(), options.classifier);
  DownstreamMetrics dm = evaluate_downstream(model, holdout);
  rep.downstream_auc = dm.auc;
  rep.downstream_dd = dm.dd;
  rep.tradeoff = tradeoff(dm.auc, dm.dd).value;
  return rep;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ContractViolation("train fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

}  // namespace fwc
