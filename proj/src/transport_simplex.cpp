#include "transport_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fwc/errors.hpp"

namespace fwc::detail {

namespace {

using Index = Eigen::Index;

struct Cell {
  std::size_t r;
  std::size_t c;
  double x;
};

// Orders of one line's cells by cost with a cursor to the first two still
// active entries. Cursors only move forward as lines are retired.
struct LineOrder {
  std::vector<std::uint32_t> order;
  std::size_t first = 0;
  std::size_t second = 1;
};

std::vector<Cell> vogel(const std::vector<double>& a, const std::vector<double>& b,
                        const RowMatrix& C) {
  const std::size_t M = a.size(), N = b.size();
  std::vector<double> ra = a, rb = b;
  std::vector<char> row_on(M, 1), col_on(N, 1);
  std::size_t rows_left = M, cols_left = N;

  std::vector<LineOrder> rows(M), cols(N);
  for (std::size_t i = 0; i < M; ++i) {
    auto& o = rows[i].order;
    o.resize(N);
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t x, std::uint32_t y) {
      return C(static_cast<Index>(i), x) < C(static_cast<Index>(i), y);
    });
  }
  for (std::size_t j = 0; j < N; ++j) {
    auto& o = cols[j].order;
    o.resize(M);
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t x, std::uint32_t y) {
      return C(x, static_cast<Index>(j)) < C(y, static_cast<Index>(j));
    });
  }
  // Returns (best index, penalty); the penalty of a line with a single active
  // partner is its only cost.
  auto scan = [](LineOrder& lo, const std::vector<char>& on, auto cost_of) {
    while (lo.first < lo.order.size() && !on[lo.order[lo.first]]) ++lo.first;
    lo.second = std::max(lo.second, lo.first + 1);
    while (lo.second < lo.order.size() && !on[lo.order[lo.second]]) ++lo.second;
    const std::uint32_t best = lo.order[lo.first];
    double pen = lo.second < lo.order.size() ? cost_of(lo.order[lo.second]) - cost_of(best)
                                             : cost_of(best);
    return std::pair<std::uint32_t, double>{best, pen};
  };

  std::vector<Cell> basis;
  basis.reserve(M + N - 1);
  while (basis.size() + 1 < M + N) {
    double best_pen = -std::numeric_limits<double>::infinity();
    std::size_t line = 0;
    bool is_row = true;
    std::uint32_t partner = 0;
    for (std::size_t i = 0; i < M; ++i) {
      if (!row_on[i]) continue;
      auto [p, pen] = scan(rows[i], col_on, [&](std::uint32_t j) { return C(static_cast<Index>(i), j); });
      if (pen > best_pen) {
        best_pen = pen;
        line = i;
        is_row = true;
        partner = p;
      }
    }
    for (std::size_t j = 0; j < N; ++j) {
      if (!col_on[j]) continue;
      auto [p, pen] = scan(cols[j], row_on, [&](std::uint32_t i) { return C(i, static_cast<Index>(j)); });
      if (pen > best_pen) {
        best_pen = pen;
        line = j;
        is_row = false;
        partner = p;
      }
    }
    const std::size_t r = is_row ? line : partner;
    const std::size_t c = is_row ? partner : line;
    // Retire exactly one line per step; never the last row or column while
    // the other side still has more than one line.
    bool retire_row = ra[r] <= rb[c];
    if (retire_row && rows_left == 1 && cols_left > 1) retire_row = false;
    if (!retire_row && cols_left == 1 && rows_left > 1) retire_row = true;
    const double x = retire_row ? ra[r] : rb[c];
    basis.push_back({r, c, std::max(0.0, x)});
    if (retire_row) {
      rb[c] = std::max(0.0, rb[c] - x);
      ra[r] = 0.0;
      row_on[r] = 0;
      --rows_left;
    } else {
      ra[r] = std::max(0.0, ra[r] - x);
      rb[c] = 0.0;
      col_on[c] = 0;
      --cols_left;
    }
  }
  return basis;
}

}  // namespace

TransportSolution transport_simplex(const std::vector<double>& supply,
                                    const std::vector<double>& demand, const RowMatrix& C,
                                    long max_pivots) {
  const std::size_t M = supply.size(), N = demand.size();
  if (M == 0 || N == 0) throw ContractViolation("transport problem with an empty side");
  if (static_cast<std::size_t>(C.rows()) != M || static_cast<std::size_t>(C.cols()) != N)
    throw ContractViolation("transport cost shape mismatch");
  if (max_pivots < 0) max_pivots = 10 * static_cast<long>((M + N) * (M + N));

  std::vector<Cell> basis = vogel(supply, demand, C);
  const std::size_t nodes = M + N;  // rows 0..M-1, columns M..M+N-1
  std::vector<std::vector<std::size_t>> adj(nodes);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    adj[basis[k].r].push_back(k);
    adj[M + basis[k].c].push_back(k);
  }
  auto other = [&](std::size_t k, std::size_t node) {
    return node < M ? M + basis[k].c : basis[k].r;
  };

  std::vector<double> pot(nodes, 0.0);       // u for rows, v for columns
  std::vector<std::size_t> parent_edge(nodes), depth(nodes);
  std::vector<std::size_t> queue(nodes);
  const std::size_t kNone = std::numeric_limits<std::size_t>::max();
  auto rebuild = [&] {
    std::fill(depth.begin(), depth.end(), kNone);
    depth[0] = 0;
    parent_edge[0] = kNone;
    pot[0] = 0.0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = 0;
    while (head < tail) {
      std::size_t u = queue[head++];
      for (std::size_t k : adj[u]) {
        std::size_t v = other(k, u);
        if (depth[v] != kNone) continue;
        depth[v] = depth[u] + 1;
        parent_edge[v] = k;
        const double c = C(static_cast<Index>(basis[k].r), static_cast<Index>(basis[k].c));
        pot[v] = c - pot[u];
        queue[tail++] = v;
      }
    }
    if (tail != nodes) throw ConvergenceError("transport basis is not a spanning tree");
  };
  rebuild();

  double cmax = 0.0;
  for (Index i = 0; i < C.rows(); ++i)
    for (Index j = 0; j < C.cols(); ++j) cmax = std::max(cmax, std::abs(C(i, j)));
  const double tol = 1e-12 * std::max(1.0, cmax);
  const std::size_t cells = M * N;
  const std::size_t block = std::max<std::size_t>(
      std::min<std::size_t>(cells, 64), static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
  std::size_t cursor = 0;

  TransportSolution out;
  std::vector<std::size_t> up_r, up_c;  // edges on the two tree paths
  while (true) {
    // Block pricing: most negative reduced cost within the first block that
    // has one, scanning cyclically from the cursor.
    std::size_t enter = kNone;
    double best = -tol;
    std::size_t scanned = 0;
    while (scanned < cells) {
      std::size_t stop = std::min(cells, scanned + block);
      for (; scanned < stop; ++scanned) {
        std::size_t idx = cursor;
        cursor = cursor + 1 == cells ? 0 : cursor + 1;
        std::size_t i = idx / N, j = idx % N;
        double rc = C(static_cast<Index>(i), static_cast<Index>(j)) - pot[i] - pot[M + j];
        if (rc < best) {
          best = rc;
          enter = idx;
        }
      }
      if (enter != kNone) break;
    }
    if (enter == kNone) break;
    if (out.pivots >= max_pivots)
      throw ConvergenceError("transportation simplex hit its pivot cap");
    ++out.pivots;

    const std::size_t ei = enter / N, ej = enter % N;
    // Cycle: entering cell, then the tree path from column ej back to row ei.
    up_r.clear();
    up_c.clear();
    std::size_t a = ei, b = M + ej;
    while (depth[a] > depth[b]) { up_r.push_back(parent_edge[a]); a = other(parent_edge[a], a); }
    while (depth[b] > depth[a]) { up_c.push_back(parent_edge[b]); b = other(parent_edge[b], b); }
    while (a != b) {
      up_r.push_back(parent_edge[a]); a = other(parent_edge[a], a);
      up_c.push_back(parent_edge[b]); b = other(parent_edge[b], b);
    }
    // Walking from column ej toward the apex and down to row ei, edges
    // alternate -, +, -, ... starting with the edge at ej.
    std::vector<std::size_t> path(up_c.begin(), up_c.end());
    path.insert(path.end(), up_r.rbegin(), up_r.rend());
    std::size_t leave_pos = kNone;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      if (basis[path[p]].x < theta) {
        theta = basis[path[p]].x;
        leave_pos = p;
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p)
      basis[path[p]].x += (p % 2 == 0 ? -theta : theta);
    const std::size_t leave = path[leave_pos];
    auto drop = [&](std::size_t node) {
      auto& v = adj[node];
      v.erase(std::find(v.begin(), v.end(), leave));
    };
    drop(basis[leave].r);
    drop(M + basis[leave].c);
    basis[leave] = {ei, ej, theta};
    adj[ei].push_back(leave);
    adj[M + ej].push_back(leave);
    rebuild();
  }

  for (const Cell& cell : basis) {
    if (cell.x <= 0.0) continue;
    out.flows.push_back({cell.r, cell.c, cell.x});
    out.cost += cell.x * C(static_cast<Index>(cell.r), static_cast<Index>(cell.c));
  }
  std::sort(out.flows.begin(), out.flows.end(), [](const TransportFlow& x, const TransportFlow& y) {
    return x.from != y.from ? x.from < y.from : x.to < y.to;
  });
  return out;
}

}  // namespace fwc::detail
