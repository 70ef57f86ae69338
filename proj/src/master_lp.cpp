#include "master_lp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fwc/errors.hpp"

namespace fwc::detail {

CuttingPlaneMaster::CuttingPlaneMaster(std::size_t h, double box_radius)
    : h_(h), radius_(box_radius) {}

void CuttingPlaneMaster::set_box_radius(double box_radius) { radius_ = box_radius; }

Eigen::VectorXd CuttingPlaneMaster::column(std::size_t idx) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h_ + 1));
  if (idx < h_) {
    a(static_cast<Eigen::Index>(idx)) = 1.0;
  } else if (idx < 2 * h_) {
    a(static_cast<Eigen::Index>(idx - h_)) = -1.0;
  } else {
    a.head(static_cast<Eigen::Index>(h_)) = cuts_[idx - 2 * h_];
    a(static_cast<Eigen::Index>(h_)) = 1.0;
  }
  return a;
}

double CuttingPlaneMaster::cost(std::size_t idx) const {
  if (idx < h_) return -radius_;
  if (idx < 2 * h_) return 0.0;
  return offsets_[idx - 2 * h_];
}

void CuttingPlaneMaster::add_cut(const Eigen::VectorXd& subgradient, double offset) {
  cuts_.push_back(subgradient);
  offsets_.push_back(offset);
  ++cut_cols_;
  if (cut_cols_ == 1) {
    // mu_1 = 1 with nu_i or sigma_i absorbing -g_1i is a feasible basis.
    basis_.clear();
    for (std::size_t i = 0; i < h_; ++i)
      basis_.push_back(subgradient(static_cast<Eigen::Index>(i)) < 0.0 ? i : h_ + i);
    basis_.push_back(2 * h_);
  }
}

double CuttingPlaneMaster::solve() {
  if (cut_cols_ == 0) throw ContractViolation("cutting-plane master has no cuts");
  const auto rows = static_cast<Eigen::Index>(h_ + 1);
  const std::size_t total = 2 * h_ + cut_cols_;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  rhs(rows - 1) = 1.0;

  double cost_scale = radius_;
  for (double b : offsets_) cost_scale = std::max(cost_scale, std::abs(b));
  const double rc_tol = 1e-12 * std::max(1.0, cost_scale);

  int degenerate_streak = 0;
  for (int iter = 0; iter < 20000; ++iter) {
    Eigen::MatrixXd B(rows, rows);
    Eigen::VectorXd cb(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      B.col(r) = column(basis_[static_cast<std::size_t>(r)]);
      cb(r) = cost(basis_[static_cast<std::size_t>(r)]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    x_basis_ = lu.solve(rhs);
    for (Eigen::Index r = 0; r < rows; ++r)
      if (x_basis_(r) < 0.0 && x_basis_(r) > -1e-13) x_basis_(r) = 0.0;
    Eigen::VectorXd duals = B.transpose().partialPivLu().solve(cb);

    std::vector<char> in_basis(total, 0);
    for (std::size_t b : basis_) in_basis[b] = 1;

    // Dantzig pricing; Bland's rule after a run of degenerate pivots.
    const bool bland = degenerate_streak > 25;
    std::size_t entering = total;
    double best_rc = rc_tol;
    for (std::size_t j = 0; j < total; ++j) {
      if (in_basis[j]) continue;
      double rc = cost(j) - duals.dot(column(j));
      if (rc > best_rc) {
        best_rc = rc;
        entering = j;
        if (bland) break;
      }
    }
    if (entering == total) return cb.dot(x_basis_);

    Eigen::VectorXd dir = lu.solve(column(entering));
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < rows; ++r)
      if (dir(r) > 1e-12) best_ratio = std::min(best_ratio, std::max(0.0, x_basis_(r)) / dir(r));
    Eigen::Index leave = -1;
    const double tie = best_ratio * (1.0 + 1e-12) + 1e-15;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (dir(r) <= 1e-12 || std::max(0.0, x_basis_(r)) / dir(r) > tie) continue;
      if (leave < 0 || basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])
        leave = r;
    }
    if (leave < 0) throw ConvergenceError("cutting-plane master LP is unbounded");
    degenerate_streak = best_ratio <= 1e-15 ? degenerate_streak + 1 : 0;
    basis_[static_cast<std::size_t>(leave)] = entering;
  }
  throw ConvergenceError("cutting-plane master LP did not converge");
}

std::vector<double> CuttingPlaneMaster::cut_weights() const {
  std::vector<double> w(cut_cols_, 0.0);
  for (std::size_t r = 0; r < basis_.size(); ++r)
    if (basis_[r] >= 2 * h_ && static_cast<Eigen::Index>(r) < x_basis_.size())
      w[basis_[r] - 2 * h_] = x_basis_(static_cast<Eigen::Index>(r));
  return w;
}

}  // namespace fwc::detail
