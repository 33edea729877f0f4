#pragma once

// Forward pass of the DFT backbone:
//
//   x (l voxels) -> patchify -> embed -> [filter block] x L -> FreMLP -> f
//
// Each operation is a free function so it can be tested on its own; the
// optional cache arguments record what the backward pass needs.

#include <span>
#include <string>
#include <vector>

#include "litemind/backbone/layers.hpp"
#include "litemind/backbone/params.hpp"
#include "litemind/numerics/dft.hpp"

namespace litemind {

template <typename T>
RealTensor<T> patchify(std::span<const T> x, std::size_t patch_size) {
  if (x.empty()) throw DataError("patchify: empty voxel vector");
  if (patch_size == 0) throw DataError("patchify: patch size must be >= 1");
  const std::size_t n = (x.size() + patch_size - 1) / patch_size;
  RealTensor<T> out({n, patch_size});
  std::copy(x.begin(), x.end(), out.data.begin());
  return out;
}

// t[i] = patches[i] * proj + bias + pos[i]
template <typename T>
RealTensor<T> embed(const RealTensor<T>& patches, const PatchEmbedder<T>& e) {
  const std::size_t n = patches.rows(), p = patches.cols();
  if (e.proj.rows() != p || e.pos.rows() != n || e.pos.cols() != e.proj.cols() ||
      e.bias.size() != e.proj.cols()) {
    throw DataError("embed: patches " + shape_str(patches.shape) + " do not match embedder proj " +
                    shape_str(e.proj.shape) + " / pos " + shape_str(e.pos.shape));
  }
  const std::size_t d = e.proj.cols();
  RealTensor<T> t({n, d});
  matmul<T>(patches.data, e.proj.data, n, p, d, t.data);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) t(i, c) += e.bias.data[c] + e.pos(i, c);
  }
  return t;
}

template <typename T>
struct BlockOptions {
  bool layer_norm = true;
  bool residual = true;
  T eps = static_cast<T>(1e-5);

  static BlockOptions from(const BackboneConfig& cfg) {
    return {cfg.layer_norm, cfg.residual, static_cast<T>(cfg.norm_eps)};
  }
};

template <typename T>
struct FilterSpectrum {
  ComplexTensor<T> input;   // X = dft(a)
  std::vector<T> power;     // S = |X|^2 / n
  ComplexTensor<T> output;  // X^ = sum_m c_m S (.) k_m
};

// Spectral filtering of an already-normalized token matrix a (n x d).
template <typename T>
FilterSpectrum<T> filter_spectrum(const RealTensor<T>& a, const FilterBlock<T>& blk) {
  const std::size_t n = a.rows(), d = a.cols();
  const std::size_t M = blk.dct.size();
  if (blk.filters.shape != Shape{M, n, d}) {
    throw DataError("filter block: filters " + shape_str(blk.filters.shape) + " do not match tokens " +
                    shape_str(a.shape) + " with M=" + std::to_string(M));
  }
  FilterSpectrum<T> s;
  s.input = dft_1d(a);
  s.power.resize(n * d);
  const T inv_n = T{1} / static_cast<T>(n);
  for (std::size_t i = 0; i < n * d; ++i) {
    s.power[i] = (s.input.re[i] * s.input.re[i] + s.input.im[i] * s.input.im[i]) * inv_n;
  }
  s.output = ComplexTensor<T>({n, d});
  for (std::size_t m = 0; m < M; ++m) {
    const T c = static_cast<T>(blk.dct[m]);
    const T* kr = blk.filters.re.data() + m * n * d;
    const T* ki = blk.filters.im.data() + m * n * d;
    for (std::size_t i = 0; i < n * d; ++i) {
      s.output.re[i] += s.power[i] * kr[i] * c;
      s.output.im[i] += s.power[i] * ki[i] * c;
    }
  }
  return s;
}

template <typename T>
struct FilterBlockCache {
  RealTensor<T> input;        // t
  RealTensor<T> normalized;   // a = LN(t)
  NormCache<T> norm;
  FilterSpectrum<T> spectrum;
  RealTensor<T> filtered;     // t1 = t + u, input of the channel MLP
  RealTensor<T> mlp_in;       // LN2(t1)
  NormCache<T> mlp_norm;
  std::vector<T> mlp_pre;     // n x h
  std::vector<T> mlp_act;     // n x h
};

template <typename T>
RealTensor<T> filter_block_forward(const RealTensor<T>& t, const FilterBlock<T>& blk,
                                   const BlockOptions<T>& opt, std::size_t block_index = 0,
                                   FilterBlockCache<T>* cache = nullptr) {
  const std::size_t n = t.rows(), d = t.cols();
  if (blk.norm_gain.size() != d || blk.norm_bias.size() != d) {
    throw DataError("filter block " + std::to_string(block_index) + ": norm width does not match d=" +
                    std::to_string(d));
  }
  RealTensor<T> a = t;
  NormCache<T> norm;
  if (opt.layer_norm) {
    layer_norm_rows<T>(t.data, n, d, blk.norm_gain.data, blk.norm_bias.data, opt.eps, a.data, &norm);
  }
  auto spec = filter_spectrum(a, blk);
  const auto u = idft_1d(spec.output);

  RealTensor<T> out({n, d});
  for (std::size_t i = 0; i < n * d; ++i) out.data[i] = (opt.residual ? t.data[i] : T{0}) + u.re[i];

  if (cache) {
    cache->input = t;
    cache->normalized = std::move(a);
    cache->norm = std::move(norm);
    cache->spectrum = std::move(spec);
  }

  if (blk.has_mlp()) {
    const auto& mlp = blk.mlp;
    const std::size_t h = mlp.hidden();
    RealTensor<T> x1 = out;
    RealTensor<T> in({n, d});
    NormCache<T> norm2;
    layer_norm_rows<T>(x1.data, n, d, mlp.norm_gain.data, mlp.norm_bias.data, opt.eps, in.data, &norm2);
    std::vector<T> pre(n * h), act(n * h);
    matmul<T>(in.data, mlp.w1.data, n, d, h, pre);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < h; ++j) {
        pre[i * h + j] += mlp.b1.data[j];
        act[i * h + j] = gelu(pre[i * h + j]);
      }
    }
    std::vector<T> y(n * d);
    matmul<T>(act, mlp.w2.data, n, h, d, y);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        out(i, c) = (opt.residual ? x1(i, c) : T{0}) + y[i * d + c] + mlp.b2.data[c];
      }
    }
    if (cache) {
      cache->filtered = std::move(x1);
      cache->mlp_in = std::move(in);
      cache->mlp_norm = std::move(norm2);
      cache->mlp_pre = std::move(pre);
      cache->mlp_act = std::move(act);
    }
  }

  if (!out.all_finite()) {
    throw NumericError("filter block " + std::to_string(block_index) + " produced non-finite values");
  }
  return out;
}

template <typename T>
struct FremlpCache {
  ComplexTensor<T> spectrum;  // X^ = dft(t^), n x d
  ComplexTensor<T> pre;       // X^T W + B before the activation, stored n' x d
};

template <typename T>
struct FremlpResult {
  RealTensor<T> tokens;       // t', n' x d
  ComplexTensor<T> spectrum;  // X', n' x d
  T imag_residue{0};          // max |Im idft(X')|
};

// Spectral stage: X' = sigma(X^T W + B)^T, sigma applied to the real and
// imaginary parts separately. X is n x d, the result n' x d.
template <typename T>
ComplexTensor<T> fremlp_spectrum(const ComplexTensor<T>& X, const FreqProjector<T>& pr, T slope,
                                 ComplexTensor<T>* pre_out = nullptr) {
  const std::size_t n = X.rows(), d = X.cols();
  if (pr.weight.shape.size() != 2 || pr.weight.shape[0] != n || pr.bias.size() != pr.weight.shape[1]) {
    throw DataError("fremlp: spectrum " + shape_str(X.shape) + " does not match projector W " +
                    shape_str(pr.weight.shape) + " / B " + shape_str(pr.bias.shape));
  }
  const std::size_t n_out = pr.weight.shape[1];
  ComplexTensor<T> pre({n_out, d});
  for (std::size_t k = 0; k < n_out; ++k) {
    T* pr_re = pre.re.data() + k * d;
    T* pr_im = pre.im.data() + k * d;
    for (std::size_t c = 0; c < d; ++c) {
      pr_re[c] = pr.bias.re[k];
      pr_im[c] = pr.bias.im[k];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const T wr = pr.weight.re[i * n_out + k];
      const T wi = pr.weight.im[i * n_out + k];
      const T* xr = X.re.data() + i * d;
      const T* xi = X.im.data() + i * d;
      for (std::size_t c = 0; c < d; ++c) {
        pr_re[c] += xr[c] * wr - xi[c] * wi;
        pr_im[c] += xr[c] * wi + xi[c] * wr;
      }
    }
  }
  ComplexTensor<T> out({n_out, d});
  for (std::size_t i = 0; i < pre.size(); ++i) {
    out.re[i] = leaky_ramp(pre.re[i], slope);
    out.im[i] = leaky_ramp(pre.im[i], slope);
  }
  if (pre_out) *pre_out = std::move(pre);
  return out;
}

// t' = Re idft(fremlp_spectrum(dft(t^))) over the n' output tokens.
template <typename T>
FremlpResult<T> fremlp(const RealTensor<T>& t_hat, const FreqProjector<T>& pr, T slope,
                       FremlpCache<T>* cache = nullptr) {
  auto X = dft_1d(t_hat);
  FremlpResult<T> res;
  res.spectrum = fremlp_spectrum(X, pr, slope, cache ? &cache->pre : nullptr);
  auto real = take_real(idft_1d(res.spectrum));
  res.tokens = std::move(real.value);
  res.imag_residue = real.max_imag_residue;
  if (cache) cache->spectrum = std::move(X);
  return res;
}

template <typename T>
struct ForwardCache {
  RealTensor<T> patches;
  std::vector<FilterBlockCache<T>> blocks;
  RealTensor<T> filtered;  // t^, input of the frequency projector
  FremlpCache<T> fremlp;
};

// Returns f with shape n' x D' (hidden) or D' (cls).
template <typename T>
RealTensor<T> forward(std::span<const T> x, const DftBackbone<T>& m, ForwardCache<T>* cache = nullptr) {
  const auto& cfg = m.config;
  if (x.size() != cfg.voxel_len) {
    throw DataError("forward: voxel vector has length " + std::to_string(x.size()) + ", expected " +
                    std::to_string(cfg.voxel_len));
  }
  auto patches = patchify(x, cfg.patch_size);
  auto t = embed(patches, m.embedder);
  const auto opt = BlockOptions<T>::from(cfg);
  if (cache) cache->blocks.resize(m.blocks.size());
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    t = filter_block_forward(t, m.blocks[b], opt, b, cache ? &cache->blocks[b] : nullptr);
  }
  auto res = fremlp(t, m.projector, static_cast<T>(cfg.activation_slope), cache ? &cache->fremlp : nullptr);
  if (cache) {
    cache->patches = std::move(patches);
    cache->filtered = std::move(t);
  }
  if (cfg.variant == Variant::cls) res.tokens.shape = {cfg.out_dim};
  return std::move(res.tokens);
}

}  // namespace litemind
