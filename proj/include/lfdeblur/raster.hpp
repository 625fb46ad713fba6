#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lfdeblur {

/// Dense row-major 2-D scalar field.
class Raster {
 public:
  Raster() = default;
  Raster(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(checked_size(rows, cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  const double& operator()(int r, int c) const {
    return v_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  bool same_extent(const Raster& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }

  void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Raster: negative extent");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0, cols_ = 0;
  std::vector<double> v_;
};

double sum(const Raster& a);
double dot(const Raster& a, const Raster& b);
double max_abs(const Raster& a);
double max_abs_diff(const Raster& a, const Raster& b);
double min_value(const Raster& a);
double max_value(const Raster& a);
bool all_finite(const Raster& a);
void clamp01(Raster& a);

/// a += s * b
void axpy(Raster& a, double s, const Raster& b);

}  // namespace lfdeblur
