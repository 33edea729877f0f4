#pragma once

// Deterministic CLS-space projector: a stack of pre-norm residual blocks
//
//   y = x + W2 gelu(W1 RMS(x) + b1) + b2,   RMS(x) = g * x / rms(x) + b
//
// mapping a voxel CLS embedding to a predicted image CLS embedding. The
// output is left unnormalized since it regresses raw CLIP CLS vectors.
// RMS rather than mean-centered normalization: centering would discard the
// mean component of x, leaving the branch unable to tell x from its
// reflection across the all-ones direction.

#include <cstdint>
#include <string>
#include <vector>

#include "litemind/backbone/layers.hpp"
#include "litemind/numerics/tensor.hpp"
#include "litemind/random.hpp"

namespace litemind {

struct ClsProjectorConfig {
  std::size_t dim = 768;
  std::size_t blocks = 4;
  double norm_eps = 1e-5;

  void validate() const {
    if (dim == 0) throw ConfigError("projector.dim must be >= 1");
    if (!(norm_eps > 0.0)) throw ConfigError("projector.norm_eps must be > 0");
  }
};

template <typename T>
struct ResidualBlock {
  RealTensor<T> norm_gain, norm_bias;  // D
  RealTensor<T> w1, b1;                // D x D, D
  RealTensor<T> w2, b2;                // D x D, D
};

template <typename T>
struct ClsProjector {
  ClsProjectorConfig config;
  std::vector<ResidualBlock<T>> blocks;

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Shape&, const std::vector<T>& v) { n += v.size(); });
    return n;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    for (std::size_t r = 0; r < self.blocks.size(); ++r) {
      auto& b = self.blocks[r];
      const std::string p = "cls_projector." + std::to_string(r) + ".";
      f(p + "norm_gain", b.norm_gain.shape, b.norm_gain.data);
      f(p + "norm_bias", b.norm_bias.shape, b.norm_bias.data);
      f(p + "w1", b.w1.shape, b.w1.data);
      f(p + "b1", b.b1.shape, b.b1.data);
      f(p + "w2", b.w2.shape, b.w2.data);
      f(p + "b2", b.b2.shape, b.b2.data);
    }
  }
};

template <typename T>
ClsProjector<T> make_zero_projector(const ClsProjectorConfig& cfg) {
  cfg.validate();
  ClsProjector<T> p;
  p.config = cfg;
  const std::size_t D = cfg.dim;
  p.blocks.resize(cfg.blocks);
  for (auto& b : p.blocks) {
    b.norm_gain = RealTensor<T>({D});
    b.norm_bias = RealTensor<T>({D});
    b.w1 = RealTensor<T>({D, D});
    b.b1 = RealTensor<T>({D});
    b.w2 = RealTensor<T>({D, D});
    b.b2 = RealTensor<T>({D});
  }
  return p;
}

// Identity-initialized: residual branches start with W2 = 0, b2 = 0, so the
// projector is exactly the identity map until trained.
template <typename T>
ClsProjector<T> init_projector(const ClsProjectorConfig& cfg, std::uint64_t seed) {
  auto p = make_zero_projector<T>(cfg);
  SplitMix64 rng(seed);
  const double a = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (auto& b : p.blocks) {
    std::fill(b.norm_gain.data.begin(), b.norm_gain.data.end(), T{1});
    for (auto& v : b.w1.data) v = static_cast<T>(rng.uniform(-a, a));
    for (auto& v : b.b1.data) v = static_cast<T>(rng.uniform(-a, a));
  }
  return p;
}

template <typename T>
ClsProjector<T> zeros_like(const ClsProjector<T>& p) {
  return make_zero_projector<T>(p.config);
}

template <typename T>
struct ProjectorCache {
  struct Block {
    RealTensor<T> input;
    RealTensor<T> normalized;
    NormCache<T> norm;
    std::vector<T> pre, act;
  };
  std::vector<Block> blocks;
};

// Row-wise over a B x D batch (a 1-D vector is treated as one row).
template <typename T>
RealTensor<T> project_cls(const RealTensor<T>& x, const ClsProjector<T>& p, ProjectorCache<T>* cache = nullptr) {
  const std::size_t D = p.config.dim;
  if (x.size() == 0 || x.size() % D != 0 || (x.shape.size() == 2 && x.cols() != D) ||
      (x.shape.size() == 1 && x.size() != D)) {
    throw DataError("project_cls: input " + shape_str(x.shape) + " does not match projector dim " +
                    std::to_string(D));
  }
  const std::size_t B = x.size() / D;
  const T eps = static_cast<T>(p.config.norm_eps);
  RealTensor<T> h = x;
  if (cache) cache->blocks.resize(p.blocks.size());
  for (std::size_t r = 0; r < p.blocks.size(); ++r) {
    const auto& b = p.blocks[r];
    RealTensor<T> a(h.shape);
    NormCache<T> norm;
    rms_norm_rows<T>(h.data, B, D, b.norm_gain.data, b.norm_bias.data, eps, a.data, &norm);
    std::vector<T> pre(B * D), act(B * D), y(B * D);
    matmul<T>(a.data, b.w1.data, B, D, D, pre);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t c = 0; c < D; ++c) {
        pre[i * D + c] += b.b1.data[c];
        act[i * D + c] = gelu(pre[i * D + c]);
      }
    matmul<T>(act, b.w2.data, B, D, D, y);
    RealTensor<T> next(h.shape);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t c = 0; c < D; ++c) next.data[i * D + c] = h.data[i * D + c] + y[i * D + c] + b.b2.data[c];
    if (cache) {
      auto& cb = cache->blocks[r];
      cb.input = std::move(h);
      cb.normalized = std::move(a);
      cb.norm = std::move(norm);
      cb.pre = std::move(pre);
      cb.act = std::move(act);
    }
    h = std::move(next);
  }
  if (!h.all_finite()) throw NumericError("project_cls: non-finite output");
  return h;
}

template <typename T>
std::vector<T> project_cls(std::span<const T> x, const ClsProjector<T>& p) {
  RealTensor<T> in({x.size()}, std::vector<T>(x.begin(), x.end()));
  return project_cls(in, p).data;
}

// Accumulates parameter gradients and returns dL/dx.
template <typename T>
RealTensor<T> project_cls_backward(const RealTensor<T>& grad_out, const ClsProjector<T>& p,
                                   const ProjectorCache<T>& cache, ClsProjector<T>& grad) {
  const std::size_t D = p.config.dim, B = grad_out.size() / D;
  RealTensor<T> g = grad_out;
  std::vector<T> g_pre(B * D), g_a(B * D), g_x(B * D);
  for (std::size_t r = p.blocks.size(); r-- > 0;) {
    const auto& b = p.blocks[r];
    const auto& cb = cache.blocks[r];
    auto& gb = grad.blocks[r];
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t c = 0; c < D; ++c) gb.b2.data[c] += g.data[i * D + c];
    matmul_at_accumulate<T>(cb.act, g.data, B, D, D, gb.w2.data);
    matmul_bt<T>(g.data, b.w2.data, B, D, D, g_pre);
    for (std::size_t i = 0; i < B * D; ++i) g_pre[i] *= gelu_grad(cb.pre[i]);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t c = 0; c < D; ++c) gb.b1.data[c] += g_pre[i * D + c];
    matmul_at_accumulate<T>(cb.normalized.data, g_pre, B, D, D, gb.w1.data);
    matmul_bt<T>(g_pre, b.w1.data, B, D, D, g_a);
    rms_norm_rows_backward<T>(g_a, B, D, b.norm_gain.data, cb.norm, g_x, gb.norm_gain.data, gb.norm_bias.data);
    for (std::size_t i = 0; i < B * D; ++i) g.data[i] += g_x[i];
  }
  return g;
}

}  // namespace litemind
