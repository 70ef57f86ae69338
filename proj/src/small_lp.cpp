#include "small_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fwc::detail {

namespace {

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows) {}

  Eigen::MatrixXd& t() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }

  void pivot(Eigen::Index pr, Eigen::Index pc) {
    t_.row(pr) /= t_(pr, pc);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == pr) continue;
      const double f = t_(i, pc);
      if (f != 0.0) t_.row(i) -= f * t_.row(pr);
    }
    basis_[static_cast<std::size_t>(pr)] = pc;
  }

  // Returns false on the iteration cap or unboundedness.
  bool optimize(const std::vector<char>& allowed) {
    const Eigen::Index r = rows();
    const double eps = 1e-11;
    int degenerate = 0;
    for (int iter = 0; iter < 50000; ++iter) {
      const bool bland = degenerate > 50;
      Eigen::Index enter = -1;
      double most = -eps;
      for (Eigen::Index j = 0; j < cols(); ++j) {
        if (!allowed[static_cast<std::size_t>(j)] || t_(r, j) >= -eps) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (t_(r, j) < most) {
          most = t_(r, j);
          enter = j;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < r; ++i) {
        if (t_(i, enter) <= 1e-12) continue;
        const double ratio = t_(i, cols()) / t_(i, enter);
        if (ratio < best - 1e-13 ||
            (ratio <= best + 1e-13 && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) return false;
      degenerate = best <= 1e-13 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
    return false;
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

SmallLpResult solve_small_lp(const SmallLp& lp) {
  const Eigen::Index nv = lp.c.size();
  const Eigen::Index ne = lp.E.rows();
  const Eigen::Index ng = lp.G.rows();
  const Eigen::Index r = ne + ng;
  // Columns: structural, surplus (one per >= row), artificial (one per row).
  const Eigen::Index surplus0 = nv, art0 = nv + ng, cols = nv + ng + r;
  Tableau tab(r, cols);
  auto& t = tab.t();
  std::vector<double> sign(static_cast<std::size_t>(r), 1.0);
  for (Eigen::Index i = 0; i < r; ++i) {
    const bool eq = i < ne;
    const double rhs = eq ? lp.e(i) : lp.g(i - ne);
    const double sg = rhs < 0.0 ? -1.0 : 1.0;
    sign[static_cast<std::size_t>(i)] = sg;
    if (eq) {
      t.row(i).head(nv) = sg * lp.E.row(i);
    } else {
      t.row(i).head(nv) = sg * lp.G.row(i - ne);
      t(i, surplus0 + (i - ne)) = -sg;
    }
    t(i, art0 + i) = 1.0;
    t(i, cols) = sg * rhs;
    tab.basis()[static_cast<std::size_t>(i)] = art0 + i;
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    t.row(r).head(art0) -= t.row(i).head(art0);
    t(r, cols) -= t(i, cols);
  }
  std::vector<char> allowed(static_cast<std::size_t>(cols), 1);
  SmallLpResult res;
  if (!tab.optimize(allowed)) return res;
  double scale = 1.0;
  for (Eigen::Index i = 0; i < r; ++i) scale = std::max(scale, std::abs(t(i, cols)));
  if (-t(r, cols) > 1e-9 * scale) return res;
  res.feasible = true;

  for (Eigen::Index i = 0; i < r; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < art0) continue;
    for (Eigen::Index j = 0; j < art0; ++j)
      if (std::abs(t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
  }
  t.row(r).setZero();
  t.row(r).head(nv) = lp.c.transpose();
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index b = tab.basis()[static_cast<std::size_t>(i)];
    const double f = t(r, b);
    if (f != 0.0) t.row(r) -= f * t.row(i);
  }
  for (Eigen::Index j = art0; j < cols; ++j) allowed[static_cast<std::size_t>(j)] = 0;
  if (!tab.optimize(allowed)) return res;
  res.optimal = true;
  res.value = -t(r, cols);
  res.x = Eigen::VectorXd::Zero(nv);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index b = tab.basis()[static_cast<std::size_t>(i)];
    if (b < nv) res.x(b) = t(i, cols);
  }
  // Reduced cost of a surplus column is the multiplier of its row; the row
  // sign flip cancels.
  res.dual_ge = Eigen::VectorXd::Zero(ng);
  for (Eigen::Index k = 0; k < ng; ++k)
    res.dual_ge(k) = std::max(0.0, t(r, surplus0 + k));
  return res;
}

}  // namespace fwc::detail
