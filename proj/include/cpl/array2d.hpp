#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cpl {

/// Dense (nx, ny) array, row-major in the x index. Index (i, j) = (x-slice, y-node).
class Array2D {
 public:
  Array2D() = default;
  Array2D(std::size_t nx, std::size_t ny, double fill = 0.0)
      : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < nx_ && j < ny_);
    return data_[i * ny_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < nx_ && j < ny_);
    return data_[i * ny_ + j];
  }

  /// View of slice i as a contiguous vector copy.
  std::vector<double> row(std::size_t i) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(i * ny_),
            data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * ny_)};
  }
  void set_row(std::size_t i, const std::vector<double>& r) {
    if (r.size() != ny_) throw std::invalid_argument("Array2D::set_row: length mismatch");
    std::copy(r.begin(), r.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * ny_));
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<double> data_;
};

}  // namespace cpl
