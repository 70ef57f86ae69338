#pragma once

#include <cstddef>
#include <vector>

#include "fwc/cost.hpp"

namespace fwc::detail {

struct TransportFlow {
  std::size_t from;
  std::size_t to;
  double mass;
};

struct TransportSolution {
  double cost = 0.0;
  std::vector<TransportFlow> flows;  // positive basic cells
  long pivots = 0;
};

// Balanced transportation problem min <cost, X> with row sums `supply` and
// column sums `demand`. Vogel's approximation gives the starting tree; MODI
// potentials with block pricing pick entering cells. Throws ConvergenceError
// after max_pivots (default 10 (M + N)^2).
TransportSolution transport_simplex(const std::vector<double>& supply,
                                    const std::vector<double>& demand, const RowMatrix& cost,
                                    long max_pivots = -1);

}  // namespace fwc::detail
