#include "lfdeblur/raster.hpp"

#include <cmath>
#include <stdexcept>

namespace lfdeblur {

double sum(const Raster& a) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i];
  return static_cast<double>(s);
}

double dot(const Raster& a, const Raster& b) {
  if (!a.same_extent(b)) throw std::invalid_argument("dot: extent mismatch");
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<long double>(a.data()[i]) * b.data()[i];
  return static_cast<double>(s);
}

double max_abs(const Raster& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

double max_abs_diff(const Raster& a, const Raster& b) {
  if (!a.same_extent(b)) throw std::invalid_argument("max_abs_diff: extent mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double min_value(const Raster& a) {
  if (a.empty()) throw std::invalid_argument("min_value: empty raster");
  double m = a.data()[0];
  for (std::size_t i = 1; i < a.size(); ++i) m = std::min(m, a.data()[i]);
  return m;
}

double max_value(const Raster& a) {
  if (a.empty()) throw std::invalid_argument("max_value: empty raster");
  double m = a.data()[0];
  for (std::size_t i = 1; i < a.size(); ++i) m = std::max(m, a.data()[i]);
  return m;
}

bool all_finite(const Raster& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a.data()[i])) return false;
  return true;
}

void clamp01(Raster& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    a.data()[i] = std::clamp(a.data()[i], 0.0, 1.0);
}

void axpy(Raster& a, double s, const Raster& b) {
  if (!a.same_extent(b)) throw std::invalid_argument("axpy: extent mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += s * b.data()[i];
}

}  // namespace lfdeblur
