#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace anw {

// Dense row-major double tensor. Double everywhere: reductions and gradients
// need to agree with 64-bit finite differences.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    t.shape = std::move(shape);
    t.data.assign(static_cast<std::size_t>(n), 0.0);
    return t;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

  double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  void fill(double v) {
    for (auto& x : data) x = v;
  }

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
};

}  // namespace anw
