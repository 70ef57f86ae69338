#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "fwc/cost.hpp"
#include "fwc/fairness.hpp"

namespace fwc {

// Coupling in which each row i carries mass 1/n. Most rows send it all to
// assignment[i]; a row with assignment[i] == kSplit divides it according to
// its entries in `shares` (fractions of the row summing to 1). An optimal
// vertex of the inner LP splits at most h rows.
struct TransportPlan {
  static constexpr Eigen::Index kSplit = -1;
  struct Share {
    std::size_t row;
    Eigen::Index col;
    double fraction;
  };

  std::vector<Eigen::Index> assignment;
  std::vector<Share> shares;
  std::size_t n = 0;
  std::size_t m = 0;

  // f(row, col, fraction of the row) for every positive entry.
  template <typename F>
  void for_each_entry(F&& f) const {
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != kSplit) f(i, assignment[i], 1.0);
    for (const Share& s : shares) f(s.row, s.col, s.fraction);
  }

  // theta = m * P^T 1_n.
  std::vector<double> theta() const;
  // <C, P>.
  double cost(const RowMatrix& C) const;
};

struct OracleResult {
  double value = 0.0;            // G(lambda)
  Eigen::VectorXd subgradient;   // A P^T 1_n
  TransportPlan plan;
};

// G(lambda) = max_{P in S_{n,m}} <1_n (A^T lambda)^T - C, P>, its subgradient
// and the maximizing plan (each row to its first best column).
OracleResult oracle_G(const RowMatrix& C, const ConstraintMatrix& A, const Eigen::VectorXd& lambda);

struct Cut {
  Eigen::VectorXd point;
  Eigen::VectorXd subgradient;
  double value;
};

// Cutting-plane state over lambda in [0, box_radius]^h.
struct DualState {
  Eigen::VectorXd lambda;       // best point found
  std::vector<Cut> cuts;
  double box_radius = 0.0;
  double best_value = 0.0;      // min G seen
  double lower_bound = 0.0;     // cutting-plane model minimum
  int n_oracle_calls = 0;
};

struct InnerOptions {
  double tol = 1e-7;            // relative gap between best G and model bound
  int max_cuts = 500;
  int max_box_doublings = 6;
  double newton_tol = 1e-9;
  int max_newton_steps = 50;
  double tie_tol = 1e-10;
  std::optional<Eigen::VectorXd> warm_start;
};

struct InnerSolution {
  // LP value F(C). With an exact recovery this is the cost of `plan`;
  // otherwise the dual value -G(lambda*), within the final gap of F(C).
  double value = 0.0;
  TransportPlan plan;
  std::vector<double> theta;
  Eigen::VectorXd lambda_star;
  // min_k (A theta)_k; +inf without constraints.
  double max_constraint_violation = 0.0;
  // <C, plan>: the cost of the returned plan.
  double plan_cost = 0.0;

  bool converged = false;
  bool boundary_warning = false;
  double gap = 0.0;
  double lower_bound = 0.0;
  int cuts = 0;
  int box_doublings = 0;
  bool exact = false;          // plan certified optimal by a dual point
  int split_rows = 0;
  int tie_repairs = 0;
  int feasibility_moves = 0;
  // G at each oracle query, in call order.
  std::vector<double> visited_values;
};

InnerSolution solve_inner(const RowMatrix& C, const ConstraintMatrix& A,
                          const InnerOptions& options = {});

// Reassigns rows whose best score at lambda is tied (within tie_tol) to the
// tied column that most increases min(A theta). Other rows are untouched.
TransportPlan repair_ties(const TransportPlan& plan, const RowMatrix& C, const ConstraintMatrix& A,
                          const Eigen::VectorXd& lambda, double tie_tol = 1e-10,
                          int* changed = nullptr);

// Smallest component of A theta for a plan (+inf when h = 0).
double min_constraint_slack(const ConstraintMatrix& A, const std::vector<double>& theta);

}  // namespace fwc
