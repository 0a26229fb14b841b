#include "cpl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cpl {

Grid1D build_y_grid(double y_max, std::size_t n, double stretch) {
  if (y_max <= 0.0) throw std::invalid_argument("build_y_grid: y_max must be positive");
  if (n < 16) throw std::invalid_argument("build_y_grid: need at least 16 nodes");
  if (stretch < 1.0 || stretch > 1.2)
    throw std::invalid_argument("build_y_grid: stretch must lie in [1, 1.2]");

  Grid1D g;
  g.truncation = y_max;
  g.nodes.resize(n);
  if (stretch == 1.0) {
    g.spacing_kind = SpacingKind::uniform;
    const double h = y_max / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.nodes[i] = static_cast<double>(i) * h;
  } else {
    g.spacing_kind = SpacingKind::stretched;
    // geometric spacing h_i = h0 * r^i with sum h_i = y_max
    const double r = stretch;
    const double h0 = y_max * (r - 1.0) / (std::pow(r, static_cast<double>(n - 1)) - 1.0);
    double h = h0;
    g.nodes[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      g.nodes[i] = g.nodes[i - 1] + h;
      h *= r;
    }
  }
  g.nodes.back() = y_max;  // pin the endpoint against accumulation error
  return g;
}

Grid1D build_x_grid(double L, std::size_t n) {
  if (L < 0.0) throw std::invalid_argument("build_x_grid: L must be nonnegative");
  Grid1D g;
  g.truncation = L;
  g.spacing_kind = SpacingKind::uniform;
  if (n == 0) throw std::invalid_argument("build_x_grid: need at least one slice");
  g.nodes.resize(n);
  if (n == 1) {
    g.nodes[0] = 0.0;
    return g;
  }
  const double dx = L / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g.nodes[i] = static_cast<double>(i) * dx;
  g.nodes.back() = L;
  return g;
}

Weight weight_samples(const Grid1D& grid, double exponent) {
  if (exponent <= 0.0) throw std::invalid_argument("weight_samples: exponent must be positive");
  Weight w;
  w.exponent = exponent;
  w.samples.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    w.samples[i] = std::pow(1.0 + grid.nodes[i], exponent);
  return w;
}

std::vector<double> fd_weights(const std::vector<double>& xs, double z, int m) {
  // Fornberg's recursion (Math. Comp. 51, 1988).
  const int n = static_cast<int>(xs.size()) - 1;
  if (m > n) throw std::invalid_argument("fd_weights: not enough nodes for derivative order");
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[static_cast<std::size_t>(i)] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
              c1 *
              (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
               c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) /
              c2;
        c[static_cast<std::size_t>(i)][0] = -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
             k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) /
            c3;
      c[static_cast<std::size_t>(j)][0] *= c4 / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) w[i] = c[i][static_cast<std::size_t>(m)];
  return w;
}

namespace {

// Interior window size for derivative order m: symmetric stencils give
// second-order accuracy (odd m: m+2 nodes, even m: m+1 nodes).
std::size_t interior_npts(int m) {
  return static_cast<std::size_t>(m % 2 == 1 ? m + 2 : m + 1);
}

}  // namespace

DiffOps::DiffOps(const Grid1D& grid) : grid_(grid) {
  const std::size_t n = grid.size();
  tables_.resize(max_order);
  for (int m = 1; m <= max_order; ++m) {
    const std::size_t p_int = interior_npts(m);
    const std::size_t p_bnd = static_cast<std::size_t>(m + 2);
    auto& table = tables_[static_cast<std::size_t>(m - 1)];
    table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t p = p_int;
      std::size_t half = p / 2;
      std::size_t start;
      if (i >= half && i + (p - 1 - half) < n) {
        start = i - half;
      } else {
        p = std::min(p_bnd, n);
        start = (i < p / 2) ? 0 : n - p;
      }
      if (p < static_cast<std::size_t>(m + 1))
        throw std::invalid_argument("DiffOps: grid too small for order " + std::to_string(m));
      std::vector<double> xs(grid.nodes.begin() + static_cast<std::ptrdiff_t>(start),
                             grid.nodes.begin() + static_cast<std::ptrdiff_t>(start + p));
      table[i] = Stencil{start, fd_weights(xs, grid.nodes[i], m)};
    }
  }
}

std::vector<double> DiffOps::apply(const std::vector<double>& field, int order) const {
  if (field.size() != grid_.size())
    throw std::invalid_argument("DiffOps::apply: field length does not match grid");
  if (order < 1 || order > max_order) throw std::invalid_argument("DiffOps::apply: bad order");
  std::vector<double> out(field.size());
  const auto& table = tables_[static_cast<std::size_t>(order - 1)];
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto& st = table[i];
    double s = 0.0;
    for (std::size_t k = 0; k < st.weights.size(); ++k) s += st.weights[k] * field[st.start + k];
    out[i] = s;
  }
  return out;
}

double DiffOps::at(const std::vector<double>& field, int order, std::size_t node) const {
  const auto& st = tables_[static_cast<std::size_t>(order - 1)][node];
  double s = 0.0;
  for (std::size_t k = 0; k < st.weights.size(); ++k) s += st.weights[k] * field[st.start + k];
  return s;
}

std::vector<double> d_dy(const std::vector<double>& field, const Grid1D& grid, int order) {
  return DiffOps(grid).apply(field, order);
}

double trapz(const std::vector<double>& f, const Grid1D& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    s += 0.5 * (f[i] + f[i + 1]) * grid.spacing(i);
  return s;
}

std::vector<double> cumtrapz(const std::vector<double>& f, const Grid1D& grid) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (f[i] + f[i - 1]) * grid.spacing(i - 1);
  return out;
}

double weighted_l2(const Array2D& field, const Weight& weight, const Grid1D& grid_x,
                   const Grid1D& grid_y) {
  if (field.nx() != grid_x.size() || field.ny() != grid_y.size() ||
      weight.samples.size() != grid_y.size())
    throw std::invalid_argument("weighted_l2: shape mismatch");
  std::vector<double> per_slice(grid_x.size());
  std::vector<double> tmp(grid_y.size());
  for (std::size_t i = 0; i < grid_x.size(); ++i) {
    for (std::size_t j = 0; j < grid_y.size(); ++j) {
      const double fw = field(i, j) * weight.samples[j];
      tmp[j] = fw * fw;
    }
    per_slice[i] = trapz(tmp, grid_y);
  }
  if (grid_x.size() == 1) return std::sqrt(per_slice[0]);
  return std::sqrt(trapz(per_slice, grid_x));
}

XStencil::XStencil(const std::vector<double>& xs, int k, int max_window) {
  if (k < 0) throw std::invalid_argument("XStencil: negative derivative order");
  const std::size_t avail = xs.size();
  if (avail < static_cast<std::size_t>(k + 1))
    throw std::runtime_error("XStencil: insufficient x-history for derivative order " +
                             std::to_string(k));
  std::size_t p = std::min(avail, static_cast<std::size_t>(k + 2));  // order min(2, avail-k)
  if (max_window > 0) p = std::min(p, static_cast<std::size_t>(max_window));
  p = std::max(p, static_cast<std::size_t>(k + 1));
  std::vector<double> window(xs.end() - static_cast<std::ptrdiff_t>(p), xs.end());
  weights_ = (k == 0) ? std::vector<double>{1.0} : fd_weights(window, window.back(), k);
  if (k == 0 && p > 1) {
    weights_.assign(p, 0.0);
    weights_.back() = 1.0;
  }
}

double XStencil::apply(const std::vector<double>& values) const {
  if (values.size() < weights_.size())
    throw std::invalid_argument("XStencil::apply: too few values");
  double s = 0.0;
  const std::size_t off = values.size() - weights_.size();
  for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * values[off + i];
  return s;
}

}  // namespace cpl
