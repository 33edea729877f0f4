#pragma once

#include <cmath>
#include <cstddef>

#include "litemind/backbone/params.hpp"

namespace litemind {

struct ParamBreakdown {
  std::size_t embedder = 0;
  std::size_t per_block = 0;
  std::size_t blocks = 0;
  std::size_t projector = 0;
  std::size_t total = 0;
};

// Closed-form count of learnable scalars; complex parameters count twice.
inline ParamBreakdown param_breakdown(const BackboneConfig& cfg) {
  const std::size_t n = cfg.n_tokens(), d = cfg.embed_dim, p = cfg.patch_size;
  const std::size_t M = cfg.filter_count, h = cfg.mlp_hidden, n_out = cfg.out_tokens;
  ParamBreakdown b;
  b.embedder = p * d + d + n * d;
  b.per_block = 2 * M * n * d + 2 * d;
  if (h > 0) b.per_block += 2 * d + d * h + h + h * d + d;
  b.blocks = cfg.depth * b.per_block;
  b.projector = 2 * n * n_out + 2 * n_out;
  b.total = b.embedder + b.blocks + b.projector;
  return b;
}

template <typename T>
std::size_t param_count(const DftBackbone<T>& m) {
  return m.param_count();
}

// Multiply-accumulate estimate following the complexity accounting
// O((n log n + n n' + n') D'):
//   patch embedding   n p D'
//   each block        2 n D' log2 n  (DFT + IDFT)  +  M n D'  (filter library)
//                     + 2 n D' h     (channel MLP, when enabled)
//   projector         2 n D' log2 n  +  2 n n' D'  +  2 n' D'
struct FlopsBreakdown {
  double patch_embed = 0;
  double per_block = 0;
  double blocks = 0;
  double projector = 0;
  double total = 0;
};

inline FlopsBreakdown flops_estimate(const BackboneConfig& cfg) {
  const double n = static_cast<double>(cfg.n_tokens());
  const double D = static_cast<double>(cfg.out_dim);
  const double p = static_cast<double>(cfg.patch_size);
  const double M = static_cast<double>(cfg.filter_count);
  const double h = static_cast<double>(cfg.mlp_hidden);
  const double n_out = static_cast<double>(cfg.out_tokens);
  const double log_n = std::log2(n);
  FlopsBreakdown f;
  f.patch_embed = n * p * D;
  f.per_block = 2.0 * n * D * log_n + M * n * D + 2.0 * n * D * h;
  f.blocks = static_cast<double>(cfg.depth) * f.per_block;
  f.projector = 2.0 * n * D * log_n + 2.0 * n * n_out * D + 2.0 * n_out * D;
  f.total = f.patch_embed + f.blocks + f.projector;
  return f;
}

}  // namespace litemind
