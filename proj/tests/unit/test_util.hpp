#pragma once

#include <cmath>
#include <functional>

namespace anw::testutil {

// Central finite difference, the independent oracle for every analytic
// gradient in the library.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

}  // namespace anw::testutil
