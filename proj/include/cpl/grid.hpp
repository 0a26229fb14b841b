#pragma once

#include <cstddef>
#include <vector>

#include "cpl/array2d.hpp"

namespace cpl {

enum class SpacingKind { uniform, stretched };

/// One-dimensional wall-normal (or streamwise) grid. Node 0 sits on the wall.
struct Grid1D {
  std::vector<double> nodes;
  SpacingKind spacing_kind = SpacingKind::uniform;
  double truncation = 0.0;  // y_max (or Y_max)

  std::size_t size() const { return nodes.size(); }
  double operator[](std::size_t i) const { return nodes[i]; }
  double spacing(std::size_t i) const { return nodes[i + 1] - nodes[i]; }
};

/// Polynomial weight w(y) = (1+y)^l sampled on a grid.
struct Weight {
  double exponent = 0.0;
  std::vector<double> samples;
};

/// Builds [0, y_max] with n nodes. stretch is the geometric spacing ratio;
/// stretch = 1 gives uniform spacing.
Grid1D build_y_grid(double y_max, std::size_t n, double stretch);

/// Uniform streamwise grid on [0, L] with n slices (n >= 1; n = 1 gives {0}).
Grid1D build_x_grid(double L, std::size_t n);

Weight weight_samples(const Grid1D& grid, double exponent);

/// Fornberg finite-difference weights: derivative of order m at point z from
/// the nodes xs. Exact on polynomials of degree <= xs.size()-1.
std::vector<double> fd_weights(const std::vector<double>& xs, double z, int m);

/// Per-grid stencil tables for d/dy of orders 1..4, second-order interior
/// accuracy, one-sided closures at the ends.
class DiffOps {
 public:
  static constexpr int max_order = 4;

  explicit DiffOps(const Grid1D& grid);

  std::vector<double> apply(const std::vector<double>& field, int order) const;
  /// Derivative at a single node.
  double at(const std::vector<double>& field, int order, std::size_t node) const;

  const Grid1D& grid() const { return grid_; }

 private:
  struct Stencil {
    std::size_t start;            // first node of the window
    std::vector<double> weights;  // one weight per window node
  };
  Grid1D grid_;
  // tables_[m-1][i] differentiates order m at node i
  std::vector<std::vector<Stencil>> tables_;
};

std::vector<double> d_dy(const std::vector<double>& field, const Grid1D& grid, int order);

/// Trapezoidal rule on a (possibly nonuniform) grid.
double trapz(const std::vector<double>& f, const Grid1D& grid);

/// Cumulative trapezoid: out[j] = integral from node 0 to node j.
std::vector<double> cumtrapz(const std::vector<double>& f, const Grid1D& grid);

/// (integral over x and y of |f w|^2)^(1/2) by tensor trapezoid. The weight is
/// a function of y only.
double weighted_l2(const Array2D& field, const Weight& weight, const Grid1D& grid_x,
                   const Grid1D& grid_y);

/// Backward (ring-buffer style) x-derivative support. Computes d^k/dx^k at the
/// last point of a trailing window of slices, with accuracy order
/// min(2, slices_available - k). Throws if fewer than k+1 slices are available.
class XStencil {
 public:
  /// xs: trailing window of x-coordinates, last entry is the evaluation point.
  XStencil(const std::vector<double>& xs, int k, int max_window = 0);

  std::size_t window() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }

  /// values: one number per window slice, aligned with the xs passed in
  /// (possibly truncated on the left to window() entries).
  double apply(const std::vector<double>& values) const;

 private:
  std::vector<double> weights_;
};

}  // namespace cpl
