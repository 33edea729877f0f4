#pragma once

#include <algorithm>
#include <complex>
#include <span>
#include <vector>

#include "litemind/numerics/dft.hpp"

namespace litemind {

// (a + bj)(c + dj) = (ac - bd) + (ad + bc)j, written out so float and double
// follow exactly the same arithmetic as the split-layout kernels.
template <typename T>
constexpr std::complex<T> complex_mul(std::complex<T> z1, std::complex<T> z2) {
  const T a = z1.real(), b = z1.imag(), c = z2.real(), d = z2.imag();
  return {a * c - b * d, a * d + b * c};
}

// y[i] = sum_tau x[tau] h[(i - tau) mod n]
template <typename T>
std::vector<T> circular_convolve(std::span<const T> x, std::span<const T> h) {
  if (x.size() != h.size()) {
    throw DataError("circular_convolve: length mismatch " + std::to_string(x.size()) + " vs " +
                    std::to_string(h.size()));
  }
  const std::size_t n = x.size();
  std::vector<T> y(n, T{0});
  for (std::size_t i = 0; i < n; ++i) {
    T acc{0};
    for (std::size_t tau = 0; tau < n; ++tau) acc += x[tau] * h[(i + n - tau) % n];
    y[i] = acc;
  }
  return y;
}

// Relative gap between spatial energy sum|t|^2 and (1/n) sum|dft(t)|^2.
// Accumulates in double regardless of T.
template <typename T>
double parseval_gap(const RealTensor<T>& t, double eps = 1e-300) {
  const auto spectrum = dft_1d(t);
  const double n = static_cast<double>(detail::token_count(t.shape));
  double spatial = 0.0;
  for (T v : t.data) spatial += static_cast<double>(v) * static_cast<double>(v);
  double freq = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double r = spectrum.re[i], m = spectrum.im[i];
    freq += r * r + m * m;
  }
  freq /= n;
  return std::abs(spatial - freq) / std::max(spatial, eps);
}

}  // namespace litemind
