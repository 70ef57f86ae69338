#pragma once

#include <Eigen/Core>
#include <vector>

namespace fwc::detail {

// min c^T x  s.t.  E x = e,  G x >= g,  x >= 0, by a dense two-phase tableau
// simplex (Dantzig pricing, Bland's rule after a run of degenerate pivots).
// Meant for the few hundred variables of a restricted transport problem.
struct SmallLp {
  Eigen::MatrixXd E;
  Eigen::VectorXd e;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::VectorXd c;
};

struct SmallLpResult {
  bool feasible = false;
  bool optimal = false;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd dual_ge;  // multipliers of G x >= g, clamped to >= 0
};

SmallLpResult solve_small_lp(const SmallLp& lp);

}  // namespace fwc::detail
