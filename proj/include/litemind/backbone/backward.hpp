#pragma once

// Reverse-mode gradients of the backbone forward pass.
//
// Complex quantities z = re + j im carry the gradient pair
// (dL/dre, dL/dim), packed as g = dL/dre + j dL/dim. With that convention
// the adjoint of z_out = A z_in is g_in = A^H g_out, which gives
//   forward DFT (unnormalized):  g_in = n * idft(g_out) = idft_unscaled(g_out)
//   inverse DFT (1/n):           g_in = dft(g_out) / n
//   product p = a * w:           g_w  = conj(a) * g_p
// The real-part projection passes (g, 0) back, so the imaginary residue
// receives no gradient.

#include "litemind/backbone/backbone.hpp"

namespace litemind {

namespace detail {

template <typename T>
ComplexTensor<T> real_to_complex_grad(const RealTensor<T>& g) {
  return ComplexTensor<T>::from_real(g);
}

// n * idft(g), i.e. the unscaled inverse transform.
template <typename T>
ComplexTensor<T> dft_adjoint(const ComplexTensor<T>& g) {
  ComplexTensor<T> out = g;
  const std::size_t n = g.rows();
  dft_plan<T>(n).inverse_unscaled(out.re, out.im, g.size() / n);
  return out;
}

// dft(g) / n
template <typename T>
ComplexTensor<T> idft_adjoint(const ComplexTensor<T>& g) {
  auto out = dft_1d(g);
  const T s = T{1} / static_cast<T>(g.rows());
  for (auto& v : out.re) v *= s;
  for (auto& v : out.im) v *= s;
  return out;
}

}  // namespace detail

// Backward through FreMLP. Accumulates projector gradients and returns
// dL/dt^.
template <typename T>
RealTensor<T> fremlp_backward(const RealTensor<T>& grad_tokens, const FreqProjector<T>& pr, T slope,
                              const FremlpCache<T>& cache, FreqProjector<T>& grad) {
  const std::size_t n = cache.spectrum.rows(), d = cache.spectrum.cols();
  const std::size_t n_out = pr.weight.shape[1];
  RealTensor<T> g_tok = grad_tokens;
  g_tok.shape = {n_out, d};
  auto g_pre = detail::idft_adjoint(detail::real_to_complex_grad(g_tok));
  for (std::size_t i = 0; i < g_pre.size(); ++i) {
    g_pre.re[i] *= leaky_ramp_grad(cache.pre.re[i], slope);
    g_pre.im[i] *= leaky_ramp_grad(cache.pre.im[i], slope);
  }
  ComplexTensor<T> g_spec({n, d});
  for (std::size_t k = 0; k < n_out; ++k) {
    const T* gr = g_pre.re.data() + k * d;
    const T* gi = g_pre.im.data() + k * d;
    T br{0}, bi{0};
    for (std::size_t c = 0; c < d; ++c) {
      br += gr[c];
      bi += gi[c];
    }
    grad.bias.re[k] += br;
    grad.bias.im[k] += bi;
    for (std::size_t i = 0; i < n; ++i) {
      const T* xr = cache.spectrum.re.data() + i * d;
      const T* xi = cache.spectrum.im.data() + i * d;
      const T wr = pr.weight.re[i * n_out + k];
      const T wi = pr.weight.im[i * n_out + k];
      T* sr = g_spec.re.data() + i * d;
      T* si = g_spec.im.data() + i * d;
      T acc_r{0}, acc_i{0};
      for (std::size_t c = 0; c < d; ++c) {
        // g_W += conj(X^) g_pre ;  g_X^ += conj(W) g_pre
        acc_r += xr[c] * gr[c] + xi[c] * gi[c];
        acc_i += xr[c] * gi[c] - xi[c] * gr[c];
        sr[c] += wr * gr[c] + wi * gi[c];
        si[c] += wr * gi[c] - wi * gr[c];
      }
      grad.weight.re[i * n_out + k] += acc_r;
      grad.weight.im[i * n_out + k] += acc_i;
    }
  }
  auto g_in = detail::dft_adjoint(g_spec);
  return RealTensor<T>({n, d}, std::move(g_in.re));
}

// Backward through one filter block. Accumulates block gradients and
// returns dL/dt.
template <typename T>
RealTensor<T> filter_block_backward(const RealTensor<T>& grad_out, const FilterBlock<T>& blk,
                                    const BlockOptions<T>& opt, const FilterBlockCache<T>& cache,
                                    FilterBlock<T>& grad) {
  const std::size_t n = grad_out.rows(), d = grad_out.cols();
  RealTensor<T> g_filtered = grad_out;  // dL/dt1

  if (blk.has_mlp()) {
    const auto& mlp = blk.mlp;
    auto& gm = grad.mlp;
    const std::size_t h = mlp.hidden();
    if (!opt.residual) std::fill(g_filtered.data.begin(), g_filtered.data.end(), T{0});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) gm.b2.data[c] += grad_out(i, c);
    }
    matmul_at_accumulate<T>(cache.mlp_act, grad_out.data, n, h, d, gm.w2.data);
    std::vector<T> g_pre(n * h);
    matmul_bt<T>(grad_out.data, mlp.w2.data, n, h, d, g_pre);
    for (std::size_t i = 0; i < n * h; ++i) g_pre[i] *= gelu_grad(cache.mlp_pre[i]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < h; ++j) gm.b1.data[j] += g_pre[i * h + j];
    }
    matmul_at_accumulate<T>(cache.mlp_in.data, g_pre, n, d, h, gm.w1.data);
    std::vector<T> g_in(n * d), g_x(n * d);
    matmul_bt<T>(g_pre, mlp.w1.data, n, d, h, g_in);
    layer_norm_rows_backward<T>(g_in, n, d, mlp.norm_gain.data, cache.mlp_norm, g_x, gm.norm_gain.data,
                                gm.norm_bias.data);
    for (std::size_t i = 0; i < n * d; ++i) g_filtered.data[i] += g_x[i];
  }

  RealTensor<T> g_t({n, d});
  if (opt.residual) g_t = g_filtered;

  // u = Re idft(X^)
  auto g_out_spec = detail::idft_adjoint(detail::real_to_complex_grad(g_filtered));
  const auto& spec = cache.spectrum;
  const std::size_t M = blk.dct.size();
  std::vector<T> k_re(n * d, T{0}), k_im(n * d, T{0});
  for (std::size_t m = 0; m < M; ++m) {
    const T c = static_cast<T>(blk.dct[m]);
    const std::size_t off = m * n * d;
    for (std::size_t i = 0; i < n * d; ++i) {
      k_re[i] += c * blk.filters.re[off + i];
      k_im[i] += c * blk.filters.im[off + i];
      grad.filters.re[off + i] += c * spec.power[i] * g_out_spec.re[i];
      grad.filters.im[off + i] += c * spec.power[i] * g_out_spec.im[i];
    }
  }
  ComplexTensor<T> g_in_spec({n, d});
  const T two_over_n = T{2} / static_cast<T>(n);
  for (std::size_t i = 0; i < n * d; ++i) {
    const T g_power = k_re[i] * g_out_spec.re[i] + k_im[i] * g_out_spec.im[i];
    g_in_spec.re[i] = two_over_n * spec.input.re[i] * g_power;
    g_in_spec.im[i] = two_over_n * spec.input.im[i] * g_power;
  }
  auto g_a = detail::dft_adjoint(g_in_spec);

  if (opt.layer_norm) {
    std::vector<T> g_x(n * d);
    layer_norm_rows_backward<T>(g_a.re, n, d, blk.norm_gain.data, cache.norm, g_x, grad.norm_gain.data,
                                grad.norm_bias.data);
    for (std::size_t i = 0; i < n * d; ++i) g_t.data[i] += g_x[i];
  } else {
    for (std::size_t i = 0; i < n * d; ++i) g_t.data[i] += g_a.re[i];
  }
  return g_t;
}

// Recomputes the forward pass for x and accumulates dL/dparams given dL/df.
// Only one sample's activations are alive at a time.
template <typename T>
void backward(std::span<const T> x, std::span<const T> grad_f, const DftBackbone<T>& m, DftBackbone<T>& grad) {
  const auto& cfg = m.config;
  if (grad_f.size() != cfg.output_size()) {
    throw DataError("backward: gradient has length " + std::to_string(grad_f.size()) + ", expected " +
                    std::to_string(cfg.output_size()));
  }
  ForwardCache<T> cache;
  forward(x, m, &cache);
  const auto opt = BlockOptions<T>::from(cfg);
  const T slope = static_cast<T>(cfg.activation_slope);

  RealTensor<T> g({cfg.out_tokens, cfg.out_dim}, std::vector<T>(grad_f.begin(), grad_f.end()));
  g = fremlp_backward(g, m.projector, slope, cache.fremlp, grad.projector);
  for (std::size_t b = m.blocks.size(); b-- > 0;) {
    g = filter_block_backward(g, m.blocks[b], opt, cache.blocks[b], grad.blocks[b]);
  }
  const std::size_t n = cfg.n_tokens(), p = cfg.patch_size, d = cfg.embed_dim;
  matmul_at_accumulate<T>(cache.patches.data, g.data, n, p, d, grad.embedder.proj.data);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      grad.embedder.bias.data[c] += g(i, c);
      grad.embedder.pos(i, c) += g(i, c);
    }
  }
}

}  // namespace litemind
