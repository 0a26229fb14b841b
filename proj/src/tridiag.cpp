#include "cpl/tridiag.hpp"

#include <cmath>
#include <stdexcept>

namespace cpl {

std::vector<double> Tridiag::solve() const {
  const std::size_t n = b.size();
  std::vector<double> cp(n), rp(n), x(n);
  double beta = b[0];
  if (std::abs(beta) < 1e-300) throw std::runtime_error("Tridiag: zero pivot at row 0");
  cp[0] = c[0] / beta;
  rp[0] = r[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = b[i] - a[i] * cp[i - 1];
    if (std::abs(beta) < 1e-300) throw std::runtime_error("Tridiag: zero pivot");
    cp[i] = c[i] / beta;
    rp[i] = (r[i] - a[i] * rp[i - 1]) / beta;
  }
  x[n - 1] = rp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = rp[i] - cp[i] * x[i + 1];
  return x;
}

}  // namespace cpl
