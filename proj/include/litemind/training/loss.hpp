#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "litemind/error.hpp"
#include "litemind/numerics/tensor.hpp"

namespace litemind {

enum class Direction { voxel_to_image, image_to_voxel, symmetric };

inline std::string to_string(Direction d) {
  switch (d) {
    case Direction::voxel_to_image: return "voxel_to_image";
    case Direction::image_to_voxel: return "image_to_voxel";
    default: return "symmetric";
  }
}

inline Direction parse_direction(const std::string& s) {
  if (s == "voxel_to_image") return Direction::voxel_to_image;
  if (s == "image_to_voxel") return Direction::image_to_voxel;
  if (s == "symmetric") return Direction::symmetric;
  throw ConfigError("unknown loss direction '" + s + "' (expected voxel_to_image|image_to_voxel|symmetric)");
}

struct LossConfig {
  double tau = 3.3546262790251185e-4;  // 1 / e^8
  double alpha = 0.0;
  Direction direction = Direction::symmetric;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("loss.tau must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("loss.alpha must be >= 0");
  }
};

// Scalar loss plus its gradient with respect to the first argument.
template <typename T>
struct LossValue {
  double value = 0.0;
  RealTensor<T> grad;
};

namespace detail {

inline std::vector<double> unit_rows(const double* src, std::size_t rows, std::size_t width,
                                     std::vector<double>* norms) {
  std::vector<double> out(rows * width);
  if (norms) norms->assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < width; ++c) sq += src[r * width + c] * src[r * width + c];
    const double norm = std::max(std::sqrt(sq), 1e-12);
    if (norms) (*norms)[r] = norm;
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = src[r * width + c] / norm;
  }
  return out;
}

// -(1/B) sum_s log softmax(logits[s, :])[s] and its gradient, or the same over
// columns when by_column is set. Log-sum-exp uses max subtraction.
inline double softmax_xent(const std::vector<double>& logits, std::size_t B, bool by_column,
                           std::vector<double>& grad, double weight) {
  double total = 0.0;
  for (std::size_t s = 0; s < B; ++s) {
    auto at = [&](std::size_t i) -> double { return by_column ? logits[i * B + s] : logits[s * B + i]; };
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < B; ++i) mx = std::max(mx, at(i));
    double sum = 0.0;
    for (std::size_t i = 0; i < B; ++i) sum += std::exp(at(i) - mx);
    const double lse = mx + std::log(sum);
    total += lse - at(s);
    for (std::size_t i = 0; i < B; ++i) {
      const double p = std::exp(at(i) - lse);
      const double g = weight * (p - (i == s ? 1.0 : 0.0)) / static_cast<double>(B);
      (by_column ? grad[i * B + s] : grad[s * B + i]) += g;
    }
  }
  return total / static_cast<double>(B);
}

}  // namespace detail

// CLIP-style contrastive loss over a batch of B paired rows. Both sides are
// flattened and L2-normalized, so f_s . V_i is a cosine similarity; logits are
// divided by tau. Returns dL/dF (V is treated as a constant target).
template <typename T>
LossValue<T> contrastive_loss(const RealTensor<T>& F, const RealTensor<T>& V, const LossConfig& cfg) {
  cfg.validate();
  const std::size_t B = F.rows(), E = F.cols();
  if (B < 2) throw DataError("contrastive_loss: batch size must be >= 2, got " + std::to_string(B));
  if (V.rows() != B || V.cols() != E) {
    throw DataError("contrastive_loss: voxel batch " + shape_str(F.shape) + " vs image batch " +
                    shape_str(V.shape));
  }
  const std::vector<double> f_raw(F.data.begin(), F.data.end());
  const std::vector<double> v_raw(V.data.begin(), V.data.end());
  std::vector<double> f_norms;
  const auto f = detail::unit_rows(f_raw.data(), B, E, &f_norms);
  const auto v = detail::unit_rows(v_raw.data(), B, E, nullptr);

  std::vector<double> logits(B * B);
  for (std::size_t s = 0; s < B; ++s)
    for (std::size_t i = 0; i < B; ++i) {
      double dot = 0.0;
      for (std::size_t c = 0; c < E; ++c) dot += f[s * E + c] * v[i * E + c];
      logits[s * B + i] = dot / cfg.tau;
      if (!std::isfinite(logits[s * B + i])) throw NumericError("contrastive_loss: non-finite logit");
    }

  std::vector<double> g_logits(B * B, 0.0);
  double value = 0.0;
  switch (cfg.direction) {
    case Direction::voxel_to_image:
      value = detail::softmax_xent(logits, B, false, g_logits, 1.0);
      break;
    case Direction::image_to_voxel:
      value = detail::softmax_xent(logits, B, true, g_logits, 1.0);
      break;
    case Direction::symmetric:
      value = 0.5 * detail::softmax_xent(logits, B, false, g_logits, 0.5) +
              0.5 * detail::softmax_xent(logits, B, true, g_logits, 0.5);
      break;
  }

  LossValue<T> out{value, RealTensor<T>(F.shape)};
  std::vector<double> g_unit(E);
  for (std::size_t s = 0; s < B; ++s) {
    std::fill(g_unit.begin(), g_unit.end(), 0.0);
    for (std::size_t i = 0; i < B; ++i) {
      const double g = g_logits[s * B + i] / cfg.tau;
      for (std::size_t c = 0; c < E; ++c) g_unit[c] += g * v[i * E + c];
    }
    // d(f/|f|)/df applied to g_unit: (g - u (u . g)) / |f|
    double proj = 0.0;
    for (std::size_t c = 0; c < E; ++c) proj += g_unit[c] * f[s * E + c];
    for (std::size_t c = 0; c < E; ++c) {
      out.grad.data[s * E + c] = static_cast<T>((g_unit[c] - f[s * E + c] * proj) / f_norms[s]);
    }
  }
  return out;
}

// (1/B) sum_s |V_s - Vhat_s|^2, gradient with respect to Vhat.
template <typename T>
LossValue<T> mse_loss(const RealTensor<T>& Vhat, const RealTensor<T>& V) {
  if (Vhat.shape != V.shape) {
    throw DataError("mse_loss: prediction " + shape_str(Vhat.shape) + " vs target " + shape_str(V.shape));
  }
  const std::size_t B = Vhat.rows();
  if (B == 0) throw DataError("mse_loss: empty batch");
  LossValue<T> out{0.0, RealTensor<T>(Vhat.shape)};
  for (std::size_t i = 0; i < Vhat.size(); ++i) {
    const double diff = static_cast<double>(Vhat.data[i]) - static_cast<double>(V.data[i]);
    out.value += diff * diff;
    out.grad.data[i] = static_cast<T>(2.0 * diff / static_cast<double>(B));
  }
  out.value /= static_cast<double>(B);
  return out;
}

template <typename T>
struct TotalLoss {
  double value = 0.0;
  double contrastive = 0.0;
  double mse = 0.0;
  RealTensor<T> grad_embeddings;   // dL/dF from the contrastive term
  RealTensor<T> grad_projection;   // dL/dVhat, empty when alpha == 0
};

// L = L_contr(F, V) + alpha * L_mse(Vhat, V_cls). With alpha == 0 the MSE
// term is not evaluated and no gradient reaches the projection.
template <typename T>
TotalLoss<T> total_loss(const RealTensor<T>& F, const RealTensor<T>& V, const RealTensor<T>* Vhat,
                        const RealTensor<T>* V_cls, const LossConfig& cfg) {
  auto c = contrastive_loss(F, V, cfg);
  TotalLoss<T> out;
  out.contrastive = c.value;
  out.value = c.value;
  out.grad_embeddings = std::move(c.grad);
  if (cfg.alpha > 0.0) {
    if (!Vhat || !V_cls) throw DataError("total_loss: alpha > 0 requires projected and target CLS batches");
    auto m = mse_loss(*Vhat, *V_cls);
    out.mse = m.value;
    out.value += cfg.alpha * m.value;
    out.grad_projection = std::move(m.grad);
    for (auto& g : out.grad_projection.data) g = static_cast<T>(cfg.alpha * g);
  }
  return out;
}

}  // namespace litemind
