#pragma once

#include <Eigen/Core>
#include <vector>

namespace fwc::detail {

// Lower bound of the cutting-plane model
//
//   min_{0 <= lambda <= R}  max_k  G_k + g_k^T (lambda - lambda_k)
//
// computed through its LP dual
//
//   max  sum_k mu_k b_k - R sum_i nu_i
//   s.t. sum_k mu_k g_k + nu - sigma = 0,  sum_k mu_k = 1,  mu, nu, sigma >= 0
//
// with b_k = G_k - g_k^T lambda_k. The dual has h + 1 rows, so a revised
// simplex with a dense basis is cheap, and adding a cut only adds a column:
// the current basis stays primal feasible and the solve warm-starts.
class CuttingPlaneMaster {
 public:
  CuttingPlaneMaster(std::size_t h, double box_radius);

  void add_cut(const Eigen::VectorXd& subgradient, double offset);
  void set_box_radius(double box_radius);

  // Optimal value of the model, i.e. a lower bound on min G over the box.
  double solve();

  // Convex weights on the cuts at the last solve.
  std::vector<double> cut_weights() const;
  std::size_t num_cuts() const { return cut_cols_; }

 private:
  Eigen::VectorXd column(std::size_t idx) const;
  double cost(std::size_t idx) const;

  std::size_t h_;
  double radius_;
  // Columns 0..h-1 are nu, h..2h-1 are sigma, then one column per cut.
  std::vector<Eigen::VectorXd> cuts_;
  std::vector<double> offsets_;
  std::size_t cut_cols_ = 0;
  std::vector<std::size_t> basis_;
  Eigen::VectorXd x_basis_;
};

}  // namespace fwc::detail
