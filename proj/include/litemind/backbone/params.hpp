#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "litemind/backbone/config.hpp"
#include "litemind/numerics/tensor.hpp"
#include "litemind/random.hpp"

namespace litemind {

// c_m = cos((2m - 1) pi / (2M)) for m = 1..M. The closed form vanishes for
// M = 1, so a single-filter library uses c_1 = 1 instead.
inline std::vector<double> dct_weights(std::size_t filter_count) {
  if (filter_count == 1) return {1.0};
  std::vector<double> c(filter_count);
  const double M = static_cast<double>(filter_count);
  for (std::size_t m = 1; m <= filter_count; ++m) {
    c[m - 1] = std::cos((2.0 * static_cast<double>(m) - 1.0) * std::numbers::pi / (2.0 * M));
  }
  return c;
}

template <typename T>
struct PatchEmbedder {
  RealTensor<T> proj;  // p x d, shared by every patch
  RealTensor<T> bias;  // d
  RealTensor<T> pos;   // n x d
};

// GFNet-style channel mixer applied after the spectral filter (optional).
template <typename T>
struct ChannelMlp {
  RealTensor<T> norm_gain, norm_bias;  // d
  RealTensor<T> w1;                    // d x h
  RealTensor<T> b1;                    // h
  RealTensor<T> w2;                    // h x d
  RealTensor<T> b2;                    // d
  std::size_t hidden() const { return b1.size(); }
};

template <typename T>
struct FilterBlock {
  ComplexTensor<T> filters;            // M x n x d
  RealTensor<T> norm_gain, norm_bias;  // d
  std::vector<double> dct;             // M, fixed
  ChannelMlp<T> mlp;                   // empty when mlp_hidden == 0
  bool has_mlp() const { return mlp.b1.size() > 0; }
};

template <typename T>
struct FreqProjector {
  ComplexTensor<T> weight;  // n x n'
  ComplexTensor<T> bias;    // n'
};

template <typename T>
struct DftBackbone {
  BackboneConfig config;
  PatchEmbedder<T> embedder;
  std::vector<FilterBlock<T>> blocks;
  FreqProjector<T> projector;

  // Deterministic parameter order: embedder.{proj,bias,pos}, then each block's
  // {filters.re, filters.im, norm_gain, norm_bias[, mlp.*]}, then
  // projector.{W.re, W.im, B.re, B.im}.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t param_count() const {
    std::size_t total = 0;
    visit([&](const std::string&, const Shape&, const std::vector<T>& v) { total += v.size(); });
    return total;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f("embedder.proj", self.embedder.proj.shape, self.embedder.proj.data);
    f("embedder.bias", self.embedder.bias.shape, self.embedder.bias.data);
    f("embedder.pos", self.embedder.pos.shape, self.embedder.pos.data);
    for (std::size_t b = 0; b < self.blocks.size(); ++b) {
      auto& blk = self.blocks[b];
      const std::string p = "blocks." + std::to_string(b) + ".";
      f(p + "filters.re", blk.filters.shape, blk.filters.re);
      f(p + "filters.im", blk.filters.shape, blk.filters.im);
      f(p + "norm_gain", blk.norm_gain.shape, blk.norm_gain.data);
      f(p + "norm_bias", blk.norm_bias.shape, blk.norm_bias.data);
      if (blk.has_mlp()) {
        f(p + "mlp.norm_gain", blk.mlp.norm_gain.shape, blk.mlp.norm_gain.data);
        f(p + "mlp.norm_bias", blk.mlp.norm_bias.shape, blk.mlp.norm_bias.data);
        f(p + "mlp.w1", blk.mlp.w1.shape, blk.mlp.w1.data);
        f(p + "mlp.b1", blk.mlp.b1.shape, blk.mlp.b1.data);
        f(p + "mlp.w2", blk.mlp.w2.shape, blk.mlp.w2.data);
        f(p + "mlp.b2", blk.mlp.b2.shape, blk.mlp.b2.data);
      }
    }
    f("projector.W.re", self.projector.weight.shape, self.projector.weight.re);
    f("projector.W.im", self.projector.weight.shape, self.projector.weight.im);
    f("projector.B.re", self.projector.bias.shape, self.projector.bias.re);
    f("projector.B.im", self.projector.bias.shape, self.projector.bias.im);
  }
};

// All-zero parameters with the right shapes (also used as a gradient buffer).
template <typename T>
DftBackbone<T> make_zero_backbone(const BackboneConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_tokens(), d = cfg.embed_dim, p = cfg.patch_size;
  DftBackbone<T> m;
  m.config = cfg;
  m.embedder.proj = RealTensor<T>({p, d});
  m.embedder.bias = RealTensor<T>({d});
  m.embedder.pos = RealTensor<T>({n, d});
  m.blocks.resize(cfg.depth);
  for (auto& blk : m.blocks) {
    blk.filters = ComplexTensor<T>({cfg.filter_count, n, d});
    blk.norm_gain = RealTensor<T>({d});
    blk.norm_bias = RealTensor<T>({d});
    blk.dct = dct_weights(cfg.filter_count);
    if (cfg.mlp_hidden > 0) {
      const std::size_t h = cfg.mlp_hidden;
      blk.mlp.norm_gain = RealTensor<T>({d});
      blk.mlp.norm_bias = RealTensor<T>({d});
      blk.mlp.w1 = RealTensor<T>({d, h});
      blk.mlp.b1 = RealTensor<T>({h});
      blk.mlp.w2 = RealTensor<T>({h, d});
      blk.mlp.b2 = RealTensor<T>({d});
    }
  }
  m.projector.weight = ComplexTensor<T>({n, cfg.out_tokens});
  m.projector.bias = ComplexTensor<T>({cfg.out_tokens});
  return m;
}

// Default initialization: uniform(+-1/sqrt(fan_in)) for dense maps and
// biases, normal(0, 0.02) for filters and positional encodings, unit norm
// gains. Draws follow the parameter visiting order from one seeded stream.
template <typename T>
DftBackbone<T> init_backbone(const BackboneConfig& cfg, std::uint64_t seed) {
  auto m = make_zero_backbone<T>(cfg);
  SplitMix64 rng(seed);
  const double n = static_cast<double>(cfg.n_tokens());
  const double p = static_cast<double>(cfg.patch_size);
  const double d = static_cast<double>(cfg.embed_dim);
  const double h = static_cast<double>(cfg.mlp_hidden);
  auto uniform = [&](std::vector<T>& v, double fan_in) {
    const double a = 1.0 / std::sqrt(fan_in);
    for (auto& x : v) x = static_cast<T>(rng.uniform(-a, a));
  };
  auto normal = [&](std::vector<T>& v, double stddev) {
    for (auto& x : v) x = static_cast<T>(rng.normal(0.0, stddev));
  };
  auto fill = [](std::vector<T>& v, T value) { std::fill(v.begin(), v.end(), value); };
  m.visit([&](const std::string& name, const Shape&, std::vector<T>& v) {
    auto ends_with = [&](const char* s) {
      const std::string suffix(s);
      return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (name == "embedder.proj" || name == "embedder.bias") {
      uniform(v, p);
    } else if (name == "embedder.pos") {
      normal(v, 0.02);
    } else if (ends_with("filters.re") || ends_with("filters.im")) {
      normal(v, 0.02);
    } else if (ends_with("norm_gain")) {
      fill(v, T{1});
    } else if (ends_with("norm_bias")) {
      fill(v, T{0});
    } else if (ends_with("mlp.w1") || ends_with("mlp.b1")) {
      uniform(v, d);
    } else if (ends_with("mlp.w2") || ends_with("mlp.b2")) {
      uniform(v, h);
    } else {
      uniform(v, n);  // projector W / B
    }
  });
  return m;
}

template <typename T>
DftBackbone<T> zeros_like(const DftBackbone<T>& m) {
  return make_zero_backbone<T>(m.config);
}

template <typename To, typename From>
DftBackbone<To> cast_backbone(const DftBackbone<From>& src) {
  auto dst = make_zero_backbone<To>(src.config);
  std::vector<const std::vector<From>*> from;
  src.visit([&](const std::string&, const Shape&, const std::vector<From>& v) { from.push_back(&v); });
  std::size_t i = 0;
  dst.visit([&](const std::string&, const Shape&, std::vector<To>& v) {
    const auto& s = *from[i++];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<To>(s[k]);
  });
  return dst;
}

}  // namespace litemind
