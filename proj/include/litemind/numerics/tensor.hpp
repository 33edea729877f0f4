#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "litemind/error.hpp"

namespace litemind {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

inline void require_positive_extents(const Shape& shape, const char* what) {
  for (auto e : shape) {
    if (e == 0) throw DataError(std::string(what) + ": zero extent in shape " + shape_str(shape));
  }
}

// Dense row-major real tensor.
template <typename T>
struct RealTensor {
  Shape shape;
  std::vector<T> data;

  RealTensor() = default;
  explicit RealTensor(Shape s) : shape(std::move(s)), data(element_count(shape), T{0}) {}
  RealTensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape)) {
      throw DataError("RealTensor: data length " + std::to_string(data.size()) +
                      " does not match shape " + shape_str(shape));
    }
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : size() / rows(); }

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  std::span<T> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols(), cols()}; }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  RealTensor<U> cast() const {
    return RealTensor<U>(shape, std::vector<U>(data.begin(), data.end()));
  }
};

// Dense row-major complex tensor in split (re, im) layout.
template <typename T>
struct ComplexTensor {
  Shape shape;
  std::vector<T> re;
  std::vector<T> im;

  ComplexTensor() = default;
  explicit ComplexTensor(Shape s)
      : shape(std::move(s)), re(element_count(shape), T{0}), im(element_count(shape), T{0}) {}
  ComplexTensor(Shape s, std::vector<T> r, std::vector<T> i)
      : shape(std::move(s)), re(std::move(r)), im(std::move(i)) {
    if (re.size() != element_count(shape) || im.size() != re.size()) {
      throw DataError("ComplexTensor: re/im lengths do not match shape " + shape_str(shape));
    }
  }

  std::size_t size() const { return re.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : size() / rows(); }

  bool all_finite() const {
    auto fin = [](T v) { return std::isfinite(v); };
    return std::all_of(re.begin(), re.end(), fin) && std::all_of(im.begin(), im.end(), fin);
  }

  static ComplexTensor from_real(const RealTensor<T>& t) {
    return ComplexTensor(t.shape, t.data, std::vector<T>(t.size(), T{0}));
  }
};

template <typename T>
T max_abs_diff(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw DataError("max_abs_diff: length mismatch");
  T worst{0};
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace litemind
