#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "sinegan/common.hpp"

namespace sinegan {

// Dense n-dimensional array, row-major, with an optional gradient slot of
// the same length. This is the universal value type of the numeric core.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty when no gradient is attached

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
    values.assign(static_cast<size_t>(numel()), 0.0);
  }
  Tensor(std::vector<int64_t> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    SINEGAN_CHECK(static_cast<int64_t>(values.size()) == numel(),
                  "tensor value count does not match shape");
  }

  int64_t numel() const {
    int64_t n = 1;
    for (int64_t d : shape) {
      SINEGAN_CHECK(d > 0, "tensor dims must be positive");
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  int64_t dim(size_t i) const { return shape.at(i); }
  size_t rank() const { return shape.size(); }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }
  bool has_grad() const { return grad.size() == values.size() && !values.empty(); }

  static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int64_t> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.values.begin(), t.values.end(), v);
    return t;
  }
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape;
}

}  // namespace sinegan
