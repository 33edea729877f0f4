#pragma once

// Minibatch training of the backbone (plus the CLS projector when alpha > 0).
//
// Per epoch: a Fisher-Yates shuffle from SplitMix64(seed) (one stream for the
// whole run), batches of batch_size with the remainder kept as a final short
// batch (a lone trailing sample has no negatives and is skipped), then an eval
// pass. Forward and backward run over static sample
// chunks with one gradient buffer per chunk, summed in chunk order, so a run
// is bit-reproducible for a fixed thread count.

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>

#include "litemind/backbone/backbone.hpp"
#include "litemind/backbone/backward.hpp"
#include "litemind/config/run_config.hpp"
#include "litemind/parallel.hpp"
#include "litemind/projector/cls_projector.hpp"
#include "litemind/retrieval/retrieval.hpp"
#include "litemind/training/loss.hpp"
#include "litemind/training/optimizer.hpp"

namespace litemind {

template <typename T>
struct LiteMindModel {
  DftBackbone<T> backbone;
  std::optional<ClsProjector<T>> projector;

  template <typename F>
  void visit(F&& f) {
    backbone.visit(f);
    if (projector) projector->visit(f);
  }
  template <typename F>
  void visit(F&& f) const {
    backbone.visit(f);
    if (projector) projector->visit(f);
  }

  std::size_t param_count() const {
    return backbone.param_count() + (projector ? projector->param_count() : 0);
  }
};

template <typename T>
LiteMindModel<T> zeros_like(const LiteMindModel<T>& m) {
  LiteMindModel<T> z{zeros_like(m.backbone), std::nullopt};
  if (m.projector) z.projector = zeros_like(*m.projector);
  return z;
}

template <typename T>
LiteMindModel<T> init_model(const RunConfig& cfg) {
  cfg.validate();
  LiteMindModel<T> m{init_backbone<T>(cfg.backbone, cfg.train.seed), std::nullopt};
  if (cfg.uses_projector()) m.projector = init_projector<T>(cfg.projector, cfg.train.seed + 1);
  return m;
}

// Paired training data: row s of x pairs with row s of targets.
template <typename T>
struct PairedSet {
  std::vector<std::string> ids;
  RealTensor<T> x;        // N x voxel_len
  RealTensor<T> targets;  // N x output_size

  std::size_t size() const { return ids.size(); }
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double eval_top1_fwd = 0.0;  // voxel -> image
  double eval_top1_bwd = 0.0;  // image -> voxel
  double wall_seconds = 0.0;
  bool has_eval = false;
};

template <typename T>
struct TrainResult {
  std::vector<EpochLog> curve;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  LiteMindModel<T> best;
  LiteMindModel<T> last;
};

template <typename T>
RealTensor<T> embed_all(const DftBackbone<T>& m, const RealTensor<T>& x, std::size_t threads) {
  const std::size_t N = x.rows(), E = m.config.output_size();
  RealTensor<T> F({N, E});
  parallel_chunks(N, resolve_threads(threads), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t s = begin; s < end; ++s) {
      auto f = forward<T>(x.row(s), m);
      std::copy(f.data.begin(), f.data.end(), F.row(s).begin());
    }
  });
  return F;
}

// Loss and (optionally) gradient for the samples idx of a set.
template <typename T>
double batch_objective(const LiteMindModel<T>& m, const PairedSet<T>& data, const std::vector<std::size_t>& idx,
                       const LossConfig& loss, std::size_t threads, LiteMindModel<T>* grad,
                       std::vector<LiteMindModel<T>>* chunk_grads = nullptr) {
  const std::size_t B = idx.size(), L = data.x.cols(), E = m.backbone.config.output_size();
  RealTensor<T> X({B, L}), V({B, E});
  for (std::size_t i = 0; i < B; ++i) {
    std::copy(data.x.row(idx[i]).begin(), data.x.row(idx[i]).end(), X.row(i).begin());
    std::copy(data.targets.row(idx[i]).begin(), data.targets.row(idx[i]).end(), V.row(i).begin());
  }
  const auto F = embed_all(m.backbone, X, threads);
  ProjectorCache<T> pcache;
  RealTensor<T> Vhat;
  if (loss.alpha > 0.0) {
    if (!m.projector) throw ConfigError("train: loss.alpha > 0 needs a CLS projector");
    Vhat = project_cls(F, *m.projector, &pcache);
  }
  auto tl = total_loss(F, V, loss.alpha > 0.0 ? &Vhat : nullptr, &V, loss);
  if (!grad) return tl.value;

  RealTensor<T> gF = std::move(tl.grad_embeddings);
  if (loss.alpha > 0.0) {
    const auto gx = project_cls_backward(tl.grad_projection, *m.projector, pcache, *grad->projector);
    for (std::size_t i = 0; i < gF.size(); ++i) gF.data[i] += gx.data[i];
  }
  const std::size_t chunks = std::max<std::size_t>(1, std::min(resolve_threads(threads), B));
  std::vector<LiteMindModel<T>> local;
  auto& bufs = chunk_grads ? *chunk_grads : local;
  if (bufs.size() != chunks) {
    bufs.clear();
    for (std::size_t c = 0; c < chunks; ++c) bufs.push_back(zeros_like(m));
  } else {
    for (auto& b : bufs)
      b.backbone.visit([](const std::string&, const Shape&, std::vector<T>& v) { std::fill(v.begin(), v.end(), T{0}); });
  }
  parallel_chunks(B, chunks, [&](std::size_t begin, std::size_t end, std::size_t c) {
    for (std::size_t i = begin; i < end; ++i) backward<T>(X.row(i), gF.row(i), m.backbone, bufs[c].backbone);
  });
  auto dst = param_refs<T>(grad->backbone);
  for (const auto& b : bufs) {
    std::size_t k = 0;
    b.backbone.visit([&](const std::string&, const Shape&, const std::vector<T>& v) {
      auto& d = *dst[k++].data;
      for (std::size_t i = 0; i < v.size(); ++i) d[i] += v[i];
    });
  }
  return tl.value;
}

template <typename T>
RetrievalReport evaluate_pairs(const LiteMindModel<T>& m, const PairedSet<T>& data, std::size_t pool,
                               std::size_t seeds, std::size_t threads) {
  auto F = embed_all(m.backbone, data.x, threads);
  EmbeddingStore<T> fs(data.ids, std::move(F));
  EmbeddingStore<T> vs(data.ids, data.targets);
  RetrievalProtocol proto;
  proto.pool_size = std::min(pool, data.size());
  proto.n_seeds = seeds;
  proto.top_k = {1};
  proto.threads = threads;
  return eval_pool_retrieval(fs, vs, proto);
}

template <typename T>
using EpochCallback = std::function<void(const EpochLog&, bool improved, const LiteMindModel<T>& model)>;

template <typename T>
TrainResult<T> train(LiteMindModel<T> model, const PairedSet<T>& train_set, const PairedSet<T>* eval_set,
                     const RunConfig& cfg, const EpochCallback<T>& on_epoch = {}) {
  cfg.validate();
  const std::size_t N = train_set.size();
  if (N < 2) throw DataError("train: need at least 2 training pairs");
  if (train_set.x.rows() != N || train_set.targets.rows() != N) throw DataError("train: ids/x/targets length mismatch");
  if (train_set.x.cols() != model.backbone.config.voxel_len) {
    throw DataError("train: voxel length " + std::to_string(train_set.x.cols()) + " vs backbone.voxel_len " +
                    std::to_string(model.backbone.config.voxel_len));
  }
  if (train_set.targets.cols() != model.backbone.config.output_size()) {
    throw DataError("train: target width " + std::to_string(train_set.targets.cols()) + " vs backbone output " +
                    std::to_string(model.backbone.config.output_size()));
  }
  if (eval_set && eval_set->size() < 2) eval_set = nullptr;

  const auto& tc = cfg.train;
  const std::size_t threads = resolve_threads(tc.threads);
  AdamW<T> opt(cfg.optimizer);
  SplitMix64 rng(tc.seed);
  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;
  std::vector<LiteMindModel<T>> chunk_grads;

  TrainResult<T> out;
  out.best = model;
  double best_metric = -1.0;
  if (eval_set) {
    const auto r = evaluate_pairs(model, *eval_set, tc.eval_pool, tc.eval_seeds, threads);
    best_metric = 0.5 * (r.image.acc_mean + r.brain.acc_mean);
  }
  double best_loss = std::numeric_limits<double>::infinity();
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    for (std::size_t i = N - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < N; b += tc.batch_size) {
      const std::size_t e = std::min(N, b + tc.batch_size);
      if (e - b < 2) continue;  // a lone trailing sample has no negatives
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                   order.begin() + static_cast<std::ptrdiff_t>(e));
      auto grad = zeros_like(model);
      const double value = batch_objective(model, train_set, idx, cfg.loss, threads, &grad, &chunk_grads);
      loss_sum += value * static_cast<double>(idx.size());
      opt.step_model(model, grad);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(N - (N % tc.batch_size == 1 ? 1 : 0));
    bool improved = false;
    if (eval_set) {
      const auto r = evaluate_pairs(model, *eval_set, tc.eval_pool, tc.eval_seeds, threads);
      log.has_eval = true;
      log.eval_top1_fwd = r.image.acc_mean;
      log.eval_top1_bwd = r.brain.acc_mean;
      const double metric = 0.5 * (log.eval_top1_fwd + log.eval_top1_bwd);
      improved = metric > best_metric;
      if (improved) best_metric = metric;
    } else {
      improved = log.train_loss < best_loss;
      if (improved) best_loss = log.train_loss;
    }
    if (improved) {
      out.best = model;
      out.best_epoch = epoch;
    }
    log.wall_seconds =
        tc.log_wall_time ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;
    out.curve.push_back(log);
    if (on_epoch) on_epoch(log, improved, model);
  }
  out.last = std::move(model);
  return out;
}

inline std::string loss_csv_header() { return "epoch,train_loss,eval_top1_fwd,eval_top1_bwd,wall_seconds\n"; }

inline std::string loss_csv_row(const EpochLog& e) {
  char buf[256];
  if (e.has_eval) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.eval_top1_fwd,
                  e.eval_top1_bwd, e.wall_seconds);
  } else {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,,,%.17g\n", e.epoch, e.train_loss, e.wall_seconds);
  }
  return buf;
}

}  // namespace litemind
