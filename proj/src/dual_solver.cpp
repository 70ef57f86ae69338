#include "fwc/dual_solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "fwc/errors.hpp"
#include "master_lp.hpp"
#include "small_lp.hpp"

namespace fwc {

using Eigen::Index;
using Eigen::VectorXd;

std::vector<double> TransportPlan::theta() const {
  std::vector<double> th(m, 0.0);
  const double unit = static_cast<double>(m) / static_cast<double>(n);
  for_each_entry([&](std::size_t, Index j, double f) { th[static_cast<std::size_t>(j)] += unit * f; });
  return th;
}

double TransportPlan::cost(const RowMatrix& C) const {
  double s = 0.0;
  for_each_entry([&](std::size_t i, Index j, double f) { s += f * C(static_cast<Index>(i), j); });
  return s / static_cast<double>(n);
}

double min_constraint_slack(const ConstraintMatrix& A, const std::vector<double>& theta) {
  if (A.h() == 0) return std::numeric_limits<double>::infinity();
  VectorXd th = Eigen::Map<const VectorXd>(theta.data(), static_cast<Index>(theta.size()));
  return (A.rows * th).minCoeff();
}

OracleResult oracle_G(const RowMatrix& C, const ConstraintMatrix& A, const VectorXd& lambda) {
  const Index n = C.rows();
  const Index m = C.cols();
  if (A.m() != static_cast<std::size_t>(m) || lambda.size() != static_cast<Index>(A.h()))
    throw ContractViolation("oracle_G: dimension mismatch");
  if ((lambda.array() < 0.0).any()) throw ContractViolation("oracle_G: lambda must be >= 0");
  VectorXd w = A.h() == 0 ? VectorXd::Zero(m) : VectorXd(A.rows.transpose() * lambda);

  OracleResult out;
  out.plan.n = static_cast<std::size_t>(n);
  out.plan.m = static_cast<std::size_t>(m);
  out.plan.assignment.resize(static_cast<std::size_t>(n));
  std::vector<double> counts(static_cast<std::size_t>(m), 0.0);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    double best_score = w(0) - C(i, 0);
    for (Index j = 1; j < m; ++j) {
      double s = w(j) - C(i, j);
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    out.plan.assignment[static_cast<std::size_t>(i)] = best;
    counts[static_cast<std::size_t>(best)] += 1.0;
    total += best_score;
  }
  out.value = total / static_cast<double>(n);
  VectorXd col_mass = Eigen::Map<VectorXd>(counts.data(), m) / static_cast<double>(n);
  out.subgradient = A.h() == 0 ? VectorXd(0) : VectorXd(A.rows * col_mass);
  return out;
}

TransportPlan repair_ties(const TransportPlan& plan, const RowMatrix& C, const ConstraintMatrix& A,
                          const VectorXd& lambda, double tie_tol, int* changed) {
  TransportPlan out = plan;
  if (changed) *changed = 0;
  if (A.h() == 0) return out;
  const Index n = C.rows();
  const Index m = C.cols();
  VectorXd w = A.rows.transpose() * lambda;
  auto th = out.theta();
  VectorXd slack = A.rows * Eigen::Map<const VectorXd>(th.data(), m);
  const double unit = static_cast<double>(m) / static_cast<double>(n);

  std::vector<Index> tied;
  for (Index i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < m; ++j) best = std::max(best, w(j) - C(i, j));
    tied.clear();
    for (Index j = 0; j < m; ++j)
      if (w(j) - C(i, j) >= best - tie_tol) tied.push_back(j);
    if (tied.size() < 2) continue;

    const Index cur = out.assignment[static_cast<std::size_t>(i)];
    if (cur == TransportPlan::kSplit) continue;
    Index choice = cur;
    double best_min = slack.minCoeff();
    for (Index j : tied) {
      if (j == cur) continue;
      double candidate = (slack + unit * (A.rows.col(j) - A.rows.col(cur))).minCoeff();
      if (candidate > best_min) {
        best_min = candidate;
        choice = j;
      }
    }
    if (choice != cur) {
      slack += unit * (A.rows.col(choice) - A.rows.col(cur));
      out.assignment[static_cast<std::size_t>(i)] = choice;
      if (changed) ++*changed;
    }
  }
  return out;
}

namespace {

// Columns with identical constraint coefficients share the dual price
// (A^T lambda)_j, so the oracle only needs each row's cheapest column per
// class. For fairness constraints the classes are the (d, y) combinations.
struct ColumnClasses {
  std::vector<Index> class_of;
  std::vector<VectorXd> coeffs;   // A column of each class
  RowMatrix min_cost;             // n x K
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> argmin;

  ColumnClasses(const RowMatrix& C, const ConstraintMatrix& A) {
    const Index m = C.cols();
    class_of.resize(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
      VectorXd col = A.rows.col(j);
      Index k = 0;
      for (; k < static_cast<Index>(coeffs.size()); ++k)
        if (coeffs[static_cast<std::size_t>(k)] == col) break;
      if (k == static_cast<Index>(coeffs.size())) coeffs.push_back(col);
      class_of[static_cast<std::size_t>(j)] = k;
    }
    const Index K = static_cast<Index>(coeffs.size());
    const Index n = C.rows();
    min_cost.setConstant(n, K, std::numeric_limits<double>::infinity());
    argmin.setConstant(n, K, -1);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m; ++j) {
        Index k = class_of[static_cast<std::size_t>(j)];
        if (C(i, j) < min_cost(i, k)) {
          min_cost(i, k) = C(i, j);
          argmin(i, k) = j;
        }
      }
    }
  }

  Index size() const { return static_cast<Index>(coeffs.size()); }

  VectorXd prices(const VectorXd& lambda) const {
    VectorXd w(size());
    for (Index k = 0; k < size(); ++k) w(k) = coeffs[static_cast<std::size_t>(k)].dot(lambda);
    return w;
  }

  // Best class for row i at prices w, ties to the smallest column index.
  Index best_class(Index i, const VectorXd& w, double* score) const {
    Index best = 0;
    double best_score = w(0) - min_cost(i, 0);
    for (Index k = 1; k < size(); ++k) {
      double s = w(k) - min_cost(i, k);
      if (s > best_score || (s == best_score && argmin(i, k) < argmin(i, best))) {
        best_score = s;
        best = k;
      }
    }
    *score = best_score;
    return best;
  }
};

struct CompressedOracle {
  double value;
  VectorXd subgradient;
  std::vector<Index> row_class;
};

CompressedOracle evaluate(const ColumnClasses& cls, const VectorXd& lambda, std::size_t h) {
  const Index n = cls.min_cost.rows();
  VectorXd w = cls.prices(lambda);
  CompressedOracle out;
  out.row_class.resize(static_cast<std::size_t>(n));
  std::vector<double> class_count(static_cast<std::size_t>(cls.size()), 0.0);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    Index k = cls.best_class(i, w, &s);
    out.row_class[static_cast<std::size_t>(i)] = k;
    class_count[static_cast<std::size_t>(k)] += 1.0;
    total += s;
  }
  out.value = total / static_cast<double>(n);
  out.subgradient = VectorXd::Zero(static_cast<Index>(h));
  for (Index k = 0; k < cls.size(); ++k)
    out.subgradient += class_count[static_cast<std::size_t>(k)] * cls.coeffs[static_cast<std::size_t>(k)];
  out.subgradient /= static_cast<double>(n);
  return out;
}

// Analytic center of {x : F x <= b} by infeasible-start Newton on
// min -sum log s  s.t.  s + F x = b. Returns false if no strictly feasible
// point was reached.
bool analytic_center(const Eigen::MatrixXd& F, const VectorXd& b, VectorXd& x, double newton_tol,
                     int max_steps) {
  const Index N = F.rows();
  VectorXd s = b - F * x;
  VectorXd r = VectorXd::Zero(N);
  bool feasible = true;
  // Rows at or numerically on their boundary (the newest cut passes through
  // x) are restarted from a positive slack; the residual carries the gap.
  double mean_pos = 0.0;
  for (Index i = 0; i < N; ++i) mean_pos += std::max(s(i), 0.0);
  const double lift = std::max(1e-3 * mean_pos / static_cast<double>(N), 1e-12);
  for (Index i = 0; i < N; ++i) {
    if (s(i) < lift) {
      feasible = false;
      r(i) = lift - s(i);  // residual s + F x - b
      s(i) = lift;
    }
  }
  for (int step = 0; step < max_steps; ++step) {
    VectorXd dinv = s.array().square().inverse();
    Eigen::MatrixXd H = F.transpose() * dinv.asDiagonal() * F;
    H.diagonal().array() += 1e-14 * std::max(1.0, H.diagonal().maxCoeff());
    VectorXd rhs = -F.transpose() * (dinv.asDiagonal() * (s + r));
    VectorXd dx = H.ldlt().solve(rhs);
    VectorXd ds = -r - F * dx;
    if (!dx.allFinite()) return false;

    if (feasible) {
      double decrement2 = (ds.array().square() * dinv.array()).sum();
      if (decrement2 / 2.0 <= newton_tol) return true;
    }
    double t = 1.0;
    while (((s + t * ds).array() <= 0.0).any()) {
      t *= 0.5;
      if (t < 1e-20) return false;
    }
    if (feasible) {
      const double phi = -s.array().log().sum();
      const double slope = -(ds.array() / s.array()).sum();
      while (-(s + t * ds).array().log().sum() > phi + 0.01 * t * slope && t > 1e-20) t *= 0.5;
      x += t * dx;
      VectorXd fresh = b - F * x;
      if ((fresh.array() <= 0.0).any()) {
        s += t * ds;  // roundoff at the boundary; keep the tracked slacks
      } else {
        s = fresh;
      }
    } else {
      x += t * dx;
      s += t * ds;
      if (t == 1.0) {
        VectorXd fresh = b - F * x;
        if ((fresh.array() > 0.0).all()) {
          s = fresh;
          r.setZero();
          feasible = true;
        } else {
          r = s + F * x - b;
        }
      } else {
        r *= (1.0 - t);
      }
    }
  }
  return feasible;
}

// Greedy single-row moves between column classes that reduce the total
// constraint violation, cheapest Lagrangian regret per unit of reduction
// first. Used when the argmax plan at lambda* is not feasible.
int reduce_violation(std::vector<Index>& row_class, const ColumnClasses& cls,
                     const VectorXd& lambda, std::size_t m, std::size_t h) {
  const Index n = cls.min_cost.rows();
  const Index K = cls.size();
  const double unit = static_cast<double>(m) / static_cast<double>(n);
  VectorXd w = cls.prices(lambda);
  VectorXd slack = VectorXd::Zero(static_cast<Index>(h));
  for (Index k : row_class) slack += unit * cls.coeffs[static_cast<std::size_t>(k)];
  auto violation = [](const VectorXd& s) { return (-s.array()).max(0.0).sum(); };

  int moves = 0;
  for (int guard = 0; guard < 4 * n + 16; ++guard) {
    double v = violation(slack);
    if (v <= 1e-13) break;
    // Violation reduction depends only on (from, to) class pair.
    Eigen::MatrixXd gain(K, K);
    for (Index a = 0; a < K; ++a)
      for (Index c = 0; c < K; ++c)
        gain(a, c) = a == c ? 0.0
                            : v - violation(slack + unit * (cls.coeffs[static_cast<std::size_t>(c)] -
                                                             cls.coeffs[static_cast<std::size_t>(a)]));
    Index best_row = -1, best_to = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      Index a = row_class[static_cast<std::size_t>(i)];
      double cur = w(a) - cls.min_cost(i, a);
      for (Index c = 0; c < K; ++c) {
        if (c == a || gain(a, c) <= 1e-15) continue;
        double regret = std::max(0.0, cur - (w(c) - cls.min_cost(i, c)));
        double ratio = regret / gain(a, c);
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best_row = i;
          best_to = c;
        }
      }
    }
    if (best_row < 0) break;
    Index from = row_class[static_cast<std::size_t>(best_row)];
    slack += unit * (cls.coeffs[static_cast<std::size_t>(best_to)] -
                     cls.coeffs[static_cast<std::size_t>(from)]);
    row_class[static_cast<std::size_t>(best_row)] = best_to;
    ++moves;
  }
  return moves;
}

enum class Recovery { Failed, Feasible, Certified };

struct CrossoverResult {
  Recovery status = Recovery::Failed;
  TransportPlan plan;
  double cost = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  VectorXd lambda;
};

// Rows whose best class at lambda wins by more than delta keep it. The rest,
// merged when their candidate costs coincide, are re-optimized as a small LP
// against the constraint slack left by the fixed rows. Complementary
// slackness makes the LP multipliers a dual point; the plan is certified
// when -G there matches its cost.
CrossoverResult crossover(const ColumnClasses& cls, const VectorXd& lambda, std::size_t h,
                          double delta, std::size_t m) {
  const Index n = cls.min_cost.rows();
  const Index K = cls.size();
  VectorXd w = cls.prices(lambda);
  VectorXd fixed_slack = VectorXd::Zero(static_cast<Index>(h));
  double fixed_cost = 0.0;
  std::vector<Index> row_class(static_cast<std::size_t>(n), -1);

  using Key = std::vector<std::pair<Index, double>>;
  std::map<Key, std::size_t> group_of;
  std::vector<Key> groups;
  std::vector<std::vector<Index>> members;
  for (Index i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < K; ++k) best = std::max(best, w(k) - cls.min_cost(i, k));
    Key key;
    for (Index k = 0; k < K; ++k)
      if (w(k) - cls.min_cost(i, k) >= best - delta) key.emplace_back(k, cls.min_cost(i, k));
    if (key.size() == 1) {
      const Index k = key.front().first;
      row_class[static_cast<std::size_t>(i)] = k;
      fixed_slack += cls.coeffs[static_cast<std::size_t>(k)];
      fixed_cost += cls.min_cost(i, k);
      continue;
    }
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) {
      groups.push_back(key);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }

  CrossoverResult out;
  std::size_t nv = 0;
  for (const auto& g : groups) nv += g.size();
  if (nv > 3000) return out;

  detail::SmallLp lp;
  lp.c = VectorXd::Zero(static_cast<Index>(nv));
  lp.E = Eigen::MatrixXd::Zero(static_cast<Index>(groups.size()), static_cast<Index>(nv));
  lp.e = VectorXd::Zero(static_cast<Index>(groups.size()));
  lp.G = Eigen::MatrixXd::Zero(static_cast<Index>(h), static_cast<Index>(nv));
  lp.g = -fixed_slack;
  Index v = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    lp.e(static_cast<Index>(gi)) = static_cast<double>(members[gi].size());
    for (const auto& [k, c] : groups[gi]) {
      lp.c(v) = c;
      lp.E(static_cast<Index>(gi), v) = 1.0;
      lp.G.col(v) = cls.coeffs[static_cast<std::size_t>(k)];
      ++v;
    }
  }
  detail::SmallLpResult sol;
  if (nv > 0) {
    sol = detail::solve_small_lp(lp);
    if (!sol.optimal) return out;
  } else {
    if (fixed_slack.size() > 0 && fixed_slack.minCoeff() < -1e-12 * static_cast<double>(n)) return out;
    sol.optimal = true;
  }

  TransportPlan& plan = out.plan;
  plan.n = static_cast<std::size_t>(n);
  plan.m = m;
  plan.assignment.assign(static_cast<std::size_t>(n), TransportPlan::kSplit);
  for (Index i = 0; i < n; ++i)
    if (row_class[static_cast<std::size_t>(i)] >= 0)
      plan.assignment[static_cast<std::size_t>(i)] = cls.argmin(i, row_class[static_cast<std::size_t>(i)]);
  // Fill member rows class by class so at most |candidates| - 1 rows split.
  v = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::vector<std::pair<Index, double>> avail;
    for (const auto& [k, c] : groups[gi]) {
      double mass = std::max(0.0, sol.x(v++));
      if (mass > 1e-12) avail.emplace_back(k, mass);
    }
    double total = 0.0;
    for (const auto& a : avail) total += a.second;
    for (auto& a : avail) a.second *= static_cast<double>(members[gi].size()) / total;
    std::size_t cursor = 0;
    for (Index i : members[gi]) {
      double need = 1.0;
      std::vector<std::pair<Index, double>> parts;
      while (need > 1e-12 && cursor < avail.size()) {
        double take = std::min(need, avail[cursor].second);
        parts.emplace_back(avail[cursor].first, take);
        need -= take;
        avail[cursor].second -= take;
        if (avail[cursor].second <= 1e-12) ++cursor;
      }
      if (parts.empty()) parts.emplace_back(avail.back().first, 1.0);
      if (parts.size() == 1) {
        plan.assignment[static_cast<std::size_t>(i)] = cls.argmin(i, parts.front().first);
      } else {
        double sum = 0.0;
        for (const auto& pt : parts) sum += pt.second;
        for (const auto& pt : parts)
          plan.shares.push_back({static_cast<std::size_t>(i), cls.argmin(i, pt.first), pt.second / sum});
      }
    }
  }

  out.status = Recovery::Feasible;
  double cost = 0.0;
  plan.for_each_entry([&](std::size_t i, Index j, double f) {
    cost += f * cls.min_cost(static_cast<Index>(i), cls.class_of[static_cast<std::size_t>(j)]);
  });
  out.cost = cost / static_cast<double>(n);
  // Dual candidates: the LP multipliers, and lambda with the multipliers of
  // slack constraints zeroed (complementary slackness).
  VectorXd total_slack = VectorXd::Zero(static_cast<Index>(h));
  plan.for_each_entry([&](std::size_t, Index j, double f) {
    total_slack += f * cls.coeffs[static_cast<std::size_t>(cls.class_of[static_cast<std::size_t>(j)])];
  });
  VectorXd polished = lambda;
  for (Index k = 0; k < polished.size(); ++k)
    if (total_slack(k) > 1e-9 * static_cast<double>(n)) polished(k) = 0.0;
  for (const VectorXd* cand : {&sol.dual_ge, &polished}) {
    if (cand->size() != static_cast<Index>(h)) continue;
    double lower = -evaluate(cls, *cand, h).value;
    if (lower > out.lower) {
      out.lower = lower;
      out.lambda = *cand;
    }
  }
  const double scale = std::max(1.0, std::abs(out.cost));
  if (out.cost - out.lower <= 1e-10 * scale) out.status = Recovery::Certified;
  return out;
}

InnerSolution finish(const RowMatrix& C, const ConstraintMatrix& A, TransportPlan plan,
                     InnerSolution sol) {
  sol.plan = std::move(plan);
  sol.theta = sol.plan.theta();
  sol.plan_cost = sol.plan.cost(C);
  sol.max_constraint_violation = min_constraint_slack(A, sol.theta);
  return sol;
}

}  // namespace

InnerSolution solve_inner(const RowMatrix& C, const ConstraintMatrix& A, const InnerOptions& opt) {
  const Index n = C.rows();
  const Index m = C.cols();
  const std::size_t h = A.h();
  if (n == 0 || m == 0) throw ContractViolation("solve_inner on an empty cost matrix");
  if (A.m() != static_cast<std::size_t>(m)) throw ContractViolation("constraint width != m");
  if (!C.allFinite()) throw ContractViolation("cost matrix has non-finite entries");

  InnerSolution sol;
  if (h == 0) {
    // Unconstrained: nearest column per row is optimal.
    OracleResult r = oracle_G(C, A, VectorXd(0));
    sol.value = -r.value;
    sol.lower_bound = r.value;
    sol.lambda_star = VectorXd(0);
    sol.converged = true;
    sol.cuts = 1;
    sol.visited_values = {r.value};
    return finish(C, A, std::move(r.plan), std::move(sol));
  }

  ColumnClasses cls(C, A);
  DualState state;
  const double cmax = C.cwiseAbs().maxCoeff();
  state.box_radius = cmax > 0.0 ? 10.0 * cmax : 1.0;
  detail::CuttingPlaneMaster master(h, state.box_radius);

  VectorXd query = VectorXd::Zero(static_cast<Index>(h));
  if (opt.warm_start && opt.warm_start->size() == static_cast<Index>(h))
    query = opt.warm_start->cwiseMax(0.0).cwiseMin(state.box_radius);
  VectorXd center = VectorXd::Constant(static_cast<Index>(h), state.box_radius / 2.0);

  state.best_value = std::numeric_limits<double>::infinity();
  std::vector<Index> best_classes;
  const double floor = 1e-12 * std::max(1.0, cmax);
  auto gap_closed = [&] {
    double scale = std::max({std::abs(state.best_value), std::abs(state.lower_bound), floor});
    return state.best_value - state.lower_bound <= opt.tol * scale;
  };
  auto touches_box = [&] {
    return (state.lambda.array() >= state.box_radius * (1.0 - 1e-3)).any();
  };

  bool converged = false;
  while (state.n_oracle_calls < opt.max_cuts) {
    CompressedOracle r = evaluate(cls, query, h);
    ++state.n_oracle_calls;
    sol.visited_values.push_back(r.value);
    if (r.value < state.best_value) {
      state.best_value = r.value;
      state.lambda = query;
      best_classes = r.row_class;
    }
    state.cuts.push_back({query, r.subgradient, r.value});
    master.add_cut(r.subgradient, r.value - r.subgradient.dot(query));
    state.lower_bound = master.solve();

    if (gap_closed()) {
      if (touches_box() && sol.box_doublings < opt.max_box_doublings) {
        state.box_radius *= 2.0;
        ++sol.box_doublings;
        master.set_box_radius(state.box_radius);
        state.lower_bound = master.solve();
        if (gap_closed()) {
          converged = true;
          break;
        }
      } else {
        converged = true;
        break;
      }
    }

    // Localization polytope: box plus one objective-level cut per oracle call.
    std::vector<const Cut*> active;
    for (const auto& c : state.cuts)
      if (c.subgradient.lpNorm<Eigen::Infinity>() > 0.0) active.push_back(&c);
    const Index rows = static_cast<Index>(2 * h + active.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(rows, static_cast<Index>(h));
    VectorXd b(rows);
    for (Index i = 0; i < static_cast<Index>(h); ++i) {
      F(2 * i, i) = -1.0;
      b(2 * i) = 0.0;
      F(2 * i + 1, i) = 1.0;
      b(2 * i + 1) = state.box_radius;
    }
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Cut& c = *active[k];
      const Index row = static_cast<Index>(2 * h + k);
      F.row(row) = c.subgradient.transpose();
      b(row) = state.best_value - c.value + c.subgradient.dot(c.point);
    }
    center = center.cwiseMax(0.0).cwiseMin(state.box_radius);
    if (!analytic_center(F, b, center, opt.newton_tol, opt.max_newton_steps)) break;
    query = center;
  }

  sol.converged = converged;
  sol.boundary_warning = touches_box();
  sol.lambda_star = state.lambda;
  sol.lower_bound = state.lower_bound;
  sol.value = -state.best_value;
  sol.gap = state.best_value - state.lower_bound;
  sol.cuts = state.n_oracle_calls;

  // Exact recovery with a growing tie window; keep the cheapest feasible
  // plan if none certifies.
  std::optional<CrossoverResult> recovered;
  for (double rel : {1e-9, 1e-7, 1e-5, 1e-3, 1e-2}) {
    CrossoverResult cr = crossover(cls, state.lambda, h, rel * std::max(1.0, cmax), static_cast<std::size_t>(m));
    if (cr.status == Recovery::Failed) continue;
    if (!recovered || cr.status == Recovery::Certified || cr.cost < recovered->cost) recovered = std::move(cr);
    if (recovered->status == Recovery::Certified) break;
  }
  if (recovered && recovered->status == Recovery::Certified) {
    sol.exact = true;
    sol.value = recovered->cost;
    sol.lambda_star = recovered->lambda;
    sol.gap = std::max(0.0, recovered->cost - recovered->lower);
  }
  if (recovered) {
    const auto& shares = recovered->plan.shares;
    for (std::size_t k = 0; k < shares.size(); ++k)
      if (k == 0 || shares[k].row != shares[k - 1].row) ++sol.split_rows;
    return finish(C, A, std::move(recovered->plan), std::move(sol));
  }

  TransportPlan plan;
  plan.n = static_cast<std::size_t>(n);
  plan.m = static_cast<std::size_t>(m);
  plan.assignment.resize(static_cast<std::size_t>(n));
  auto materialize = [&](const std::vector<Index>& classes) {
    for (Index i = 0; i < n; ++i)
      plan.assignment[static_cast<std::size_t>(i)] = cls.argmin(i, classes[static_cast<std::size_t>(i)]);
  };
  materialize(best_classes);

  plan = repair_ties(plan, C, A, state.lambda, opt.tie_tol, &sol.tie_repairs);
  if (min_constraint_slack(A, plan.theta()) < -1e-13) {
    std::vector<Index> classes(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      classes[static_cast<std::size_t>(i)] =
          cls.class_of[static_cast<std::size_t>(plan.assignment[static_cast<std::size_t>(i)])];
    std::vector<Index> before = classes;
    sol.feasibility_moves = reduce_violation(classes, cls, state.lambda, static_cast<std::size_t>(m), h);
    for (Index i = 0; i < n; ++i)
      if (classes[static_cast<std::size_t>(i)] != before[static_cast<std::size_t>(i)])
        plan.assignment[static_cast<std::size_t>(i)] = cls.argmin(i, classes[static_cast<std::size_t>(i)]);
  }
  return finish(C, A, std::move(plan), std::move(sol));
}

}  // namespace fwc
