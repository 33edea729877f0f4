#pragma once

// Discrete Fourier transforms along the token (first) axis of an n x d
// tensor, applied independently per channel.
//
// Conventions:
//   forward  X[k] = sum_i x[i] exp(-2 pi j k i / n)        (unnormalized)
//   inverse  x[i] = (1/n) sum_k X[k] exp(+2 pi j k i / n)
//
// Power-of-two lengths use an iterative radix-2 FFT; every other length
// falls back to the direct O(n^2) sum with a tabulated twiddle.

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "litemind/numerics/tensor.hpp"

namespace litemind {

template <typename T>
class DftPlan {
 public:
  explicit DftPlan(std::size_t n) : n_(n), pow2_(n > 0 && (n & (n - 1)) == 0), cos_(n), sin_(n) {
    if (n == 0) throw DataError("DftPlan: length must be >= 1");
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      cos_[k] = static_cast<T>(std::cos(angle));
      sin_[k] = static_cast<T>(std::sin(angle));
    }
  }

  std::size_t length() const { return n_; }

  // In-place transform of n rows of width d. No normalization either way.
  void forward(std::span<T> re, std::span<T> im, std::size_t d) const { run(re, im, d, false); }
  void inverse_unscaled(std::span<T> re, std::span<T> im, std::size_t d) const { run(re, im, d, true); }

 private:
  void run(std::span<T> re, std::span<T> im, std::size_t d, bool inverse) const {
    if (re.size() != n_ * d || im.size() != n_ * d) throw DataError("DftPlan: buffer size mismatch");
    if (n_ == 1) return;
    if (pow2_) {
      radix2(re, im, d, inverse);
    } else {
      direct(re, im, d, inverse);
    }
  }

  void direct(std::span<T> re, std::span<T> im, std::size_t d, bool inverse) const {
    std::vector<T> out_re(n_ * d, T{0});
    std::vector<T> out_im(n_ * d, T{0});
    const T sign = inverse ? T{1} : T{-1};
    for (std::size_t k = 0; k < n_; ++k) {
      T* orow_re = out_re.data() + k * d;
      T* orow_im = out_im.data() + k * d;
      for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t idx = (k * i) % n_;
        const T wr = cos_[idx];
        const T wi = sign * sin_[idx];
        const T* irow_re = re.data() + i * d;
        const T* irow_im = im.data() + i * d;
        for (std::size_t c = 0; c < d; ++c) {
          orow_re[c] += irow_re[c] * wr - irow_im[c] * wi;
          orow_im[c] += irow_re[c] * wi + irow_im[c] * wr;
        }
      }
    }
    std::copy(out_re.begin(), out_re.end(), re.begin());
    std::copy(out_im.begin(), out_im.end(), im.begin());
  }

  void swap_rows(std::span<T> a, std::size_t i, std::size_t j, std::size_t d) const {
    for (std::size_t c = 0; c < d; ++c) std::swap(a[i * d + c], a[j * d + c]);
  }

  void radix2(std::span<T> re, std::span<T> im, std::size_t d, bool inverse) const {
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) {
        swap_rows(re, i, j, d);
        swap_rows(im, i, j, d);
      }
    }
    const T sign = inverse ? T{1} : T{-1};
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t q = 0; q < half; ++q) {
          const T wr = cos_[q * stride];
          const T wi = sign * sin_[q * stride];
          T* ar = re.data() + (start + q) * d;
          T* ai = im.data() + (start + q) * d;
          T* br = re.data() + (start + q + half) * d;
          T* bi = im.data() + (start + q + half) * d;
          for (std::size_t c = 0; c < d; ++c) {
            const T tr = br[c] * wr - bi[c] * wi;
            const T ti = br[c] * wi + bi[c] * wr;
            br[c] = ar[c] - tr;
            bi[c] = ai[c] - ti;
            ar[c] += tr;
            ai[c] += ti;
          }
        }
      }
    }
  }

  std::size_t n_;
  bool pow2_;
  std::vector<T> cos_;
  std::vector<T> sin_;
};

// Plans are cached per thread so the free functions stay pure and reentrant.
template <typename T>
const DftPlan<T>& dft_plan(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<DftPlan<T>>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<DftPlan<T>>(n);
  return *slot;
}

namespace detail {
inline std::size_t token_count(const Shape& shape) { return shape.empty() ? 1 : shape[0]; }
}  // namespace detail

template <typename T>
ComplexTensor<T> dft_1d(const ComplexTensor<T>& x) {
  ComplexTensor<T> out = x;
  const std::size_t n = detail::token_count(x.shape);
  if (n == 0) throw DataError("dft_1d: empty token axis");
  dft_plan<T>(n).forward(out.re, out.im, x.size() / n);
  return out;
}

template <typename T>
ComplexTensor<T> dft_1d(const RealTensor<T>& t) {
  return dft_1d(ComplexTensor<T>::from_real(t));
}

template <typename T>
ComplexTensor<T> idft_1d(const ComplexTensor<T>& x) {
  ComplexTensor<T> out = x;
  const std::size_t n = detail::token_count(x.shape);
  if (n == 0) throw DataError("idft_1d: empty token axis");
  dft_plan<T>(n).inverse_unscaled(out.re, out.im, x.size() / n);
  const T scale = T{1} / static_cast<T>(n);
  for (auto& v : out.re) v *= scale;
  for (auto& v : out.im) v *= scale;
  return out;
}

template <typename T>
struct RealPart {
  RealTensor<T> value;
  T max_imag_residue{0};
};

template <typename T>
RealPart<T> take_real(const ComplexTensor<T>& x) {
  RealPart<T> out{RealTensor<T>(x.shape, x.re), T{0}};
  for (T v : x.im) out.max_imag_residue = std::max(out.max_imag_residue, std::abs(v));
  return out;
}

}  // namespace litemind
