#pragma once

#include <vector>

namespace cpl {

/// Tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = r_i solved by the
/// Thomas algorithm. Rows 0 and n-1 are expected to carry boundary conditions
/// (Dirichlet rows or pre-eliminated closures).
struct Tridiag {
  std::vector<double> a, b, c, r;

  explicit Tridiag(std::size_t n) : a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0) {}

  std::vector<double> solve() const;
};

}  // namespace cpl
