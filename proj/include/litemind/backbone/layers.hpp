#pragma once

// Small building blocks shared by the backbone and the CLS projector:
// activations, row-wise layer normalization and dense row-major matmuls.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace litemind {

template <typename T>
T leaky_ramp(T z, T slope) {
  return z >= T{0} ? z : slope * z;
}

template <typename T>
T leaky_ramp_grad(T z, T slope) {
  return z >= T{0} ? T{1} : slope;
}

// tanh-form GELU
template <typename T>
T gelu(T z) {
  constexpr T k = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  constexpr T a = static_cast<T>(0.044715);
  return T{0.5} * z * (T{1} + std::tanh(k * (z + a * z * z * z)));
}

template <typename T>
T gelu_grad(T z) {
  constexpr T k = static_cast<T>(0.7978845608028654);
  constexpr T a = static_cast<T>(0.044715);
  const T th = std::tanh(k * (z + a * z * z * z));
  return T{0.5} * (T{1} + th) + T{0.5} * z * (T{1} - th * th) * k * (T{1} + T{3} * a * z * z);
}

// Per-row normalization statistics kept for the backward pass.
template <typename T>
struct NormCache {
  std::vector<T> xhat;     // rows x width
  std::vector<T> inv_std;  // rows
};

// y = gain * (x - mean) / sqrt(var + eps) + bias, over each row of width w.
template <typename T>
void layer_norm_rows(std::span<const T> x, std::size_t rows, std::size_t w, std::span<const T> gain,
                     std::span<const T> bias, T eps, std::span<T> y, NormCache<T>* cache) {
  if (cache) {
    cache->xhat.assign(rows * w, T{0});
    cache->inv_std.assign(rows, T{0});
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * w;
    T mean{0};
    for (std::size_t c = 0; c < w; ++c) mean += xr[c];
    mean /= static_cast<T>(w);
    T var{0};
    for (std::size_t c = 0; c < w; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(w);
    const T inv = T{1} / std::sqrt(var + eps);
    for (std::size_t c = 0; c < w; ++c) {
      const T xh = (xr[c] - mean) * inv;
      y[r * w + c] = gain[c] * xh + bias[c];
      if (cache) cache->xhat[r * w + c] = xh;
    }
    if (cache) cache->inv_std[r] = inv;
  }
}

// Accumulates into grad_gain / grad_bias and writes (overwrites) grad_x.
template <typename T>
void layer_norm_rows_backward(std::span<const T> grad_y, std::size_t rows, std::size_t w,
                              std::span<const T> gain, const NormCache<T>& cache, std::span<T> grad_x,
                              std::span<T> grad_gain, std::span<T> grad_bias) {
  std::vector<T> gxhat(w);
  for (std::size_t r = 0; r < rows; ++r) {
    T mean_g{0}, mean_gx{0};
    for (std::size_t c = 0; c < w; ++c) {
      const T gy = grad_y[r * w + c];
      const T xh = cache.xhat[r * w + c];
      grad_gain[c] += gy * xh;
      grad_bias[c] += gy;
      gxhat[c] = gy * gain[c];
      mean_g += gxhat[c];
      mean_gx += gxhat[c] * xh;
    }
    mean_g /= static_cast<T>(w);
    mean_gx /= static_cast<T>(w);
    const T inv = cache.inv_std[r];
    for (std::size_t c = 0; c < w; ++c) {
      grad_x[r * w + c] = inv * (gxhat[c] - mean_g - cache.xhat[r * w + c] * mean_gx);
    }
  }
}

// y = gain * x / sqrt(mean(x^2) + eps) + bias, over each row of width w.
// Unlike layer_norm_rows the mean is kept, so only |x| is discarded.
template <typename T>
void rms_norm_rows(std::span<const T> x, std::size_t rows, std::size_t w, std::span<const T> gain,
                   std::span<const T> bias, T eps, std::span<T> y, NormCache<T>* cache) {
  if (cache) {
    cache->xhat.assign(rows * w, T{0});
    cache->inv_std.assign(rows, T{0});
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * w;
    T ms{0};
    for (std::size_t c = 0; c < w; ++c) ms += xr[c] * xr[c];
    ms /= static_cast<T>(w);
    const T inv = T{1} / std::sqrt(ms + eps);
    for (std::size_t c = 0; c < w; ++c) {
      const T xh = xr[c] * inv;
      y[r * w + c] = gain[c] * xh + bias[c];
      if (cache) cache->xhat[r * w + c] = xh;
    }
    if (cache) cache->inv_std[r] = inv;
  }
}

template <typename T>
void rms_norm_rows_backward(std::span<const T> grad_y, std::size_t rows, std::size_t w, std::span<const T> gain,
                            const NormCache<T>& cache, std::span<T> grad_x, std::span<T> grad_gain,
                            std::span<T> grad_bias) {
  std::vector<T> gxhat(w);
  for (std::size_t r = 0; r < rows; ++r) {
    T mean_gx{0};
    for (std::size_t c = 0; c < w; ++c) {
      const T gy = grad_y[r * w + c];
      const T xh = cache.xhat[r * w + c];
      grad_gain[c] += gy * xh;
      grad_bias[c] += gy;
      gxhat[c] = gy * gain[c];
      mean_gx += gxhat[c] * xh;
    }
    mean_gx /= static_cast<T>(w);
    const T inv = cache.inv_std[r];
    for (std::size_t c = 0; c < w; ++c) grad_x[r * w + c] = inv * (gxhat[c] - cache.xhat[r * w + c] * mean_gx);
  }
}

// out[r, :] = a[r, :] * B  (a: rows x k, B: k x m). Overwrites out.
template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::size_t rows, std::size_t k, std::size_t m,
            std::span<T> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* o = out.data() + r * m;
    for (std::size_t c = 0; c < m; ++c) o[c] = T{0};
    for (std::size_t j = 0; j < k; ++j) {
      const T av = a[r * k + j];
      if (av == T{0}) continue;
      const T* br = b.data() + j * m;
      for (std::size_t c = 0; c < m; ++c) o[c] += av * br[c];
    }
  }
}

// grad_b += a^T * g   (a: rows x k, g: rows x m, grad_b: k x m)
template <typename T>
void matmul_at_accumulate(std::span<const T> a, std::span<const T> g, std::size_t rows, std::size_t k,
                          std::size_t m, std::span<T> grad_b) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* gr = g.data() + r * m;
    for (std::size_t j = 0; j < k; ++j) {
      const T av = a[r * k + j];
      if (av == T{0}) continue;
      T* out = grad_b.data() + j * m;
      for (std::size_t c = 0; c < m; ++c) out[c] += av * gr[c];
    }
  }
}

// grad_a = g * B^T   (g: rows x m, B: k x m, grad_a: rows x k). Overwrites.
template <typename T>
void matmul_bt(std::span<const T> g, std::span<const T> b, std::size_t rows, std::size_t k, std::size_t m,
               std::span<T> grad_a) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* gr = g.data() + r * m;
    for (std::size_t j = 0; j < k; ++j) {
      const T* br = b.data() + j * m;
      T acc{0};
      for (std::size_t c = 0; c < m; ++c) acc += gr[c] * br[c];
      grad_a[r * k + j] = acc;
    }
  }
}

}  // namespace litemind
