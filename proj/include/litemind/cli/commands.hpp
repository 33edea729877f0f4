#pragma once

// Subcommand bodies shared by tools/litemind and the acceptance runner.
// Each writes into an output directory that holds an INCOMPLETE marker until
// the command finishes, plus run_config.json for provenance.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "litemind/backbone/budget.hpp"
#include "litemind/config/run_config.hpp"
#include "litemind/data/dataset.hpp"
#include "litemind/data/synthetic.hpp"
#include "litemind/projector/knn.hpp"
#include "litemind/projector/remote.hpp"
#include "litemind/projector/two_stage.hpp"
#include "litemind/retrieval/retrieval.hpp"
#include "litemind/training/checkpoint.hpp"
#include "litemind/training/gradcheck.hpp"
#include "litemind/training/trainer.hpp"

namespace litemind::cli {

namespace fs = std::filesystem;

class OutputDir {
 public:
  OutputDir(const std::string& path, const RunConfig& cfg) : path_(path) {
    if (path_.empty()) return;
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw DataError("cannot create " + path_ + ": " + ec.message());
    write_text(file("INCOMPLETE"), "");
    write_run_config(file("run_config.json"), cfg);
  }

  bool enabled() const { return !path_.empty(); }
  std::string file(const std::string& name) const { return (fs::path(path_) / name).string(); }

  void write_json(const std::string& name, const nlohmann::json& j) const {
    if (enabled()) write_text(file(name), j.dump(2) + "\n");
  }

  void finish() const {
    if (enabled()) fs::remove(file("INCOMPLETE"));
  }

 private:
  std::string path_;
};

template <typename T>
PairedSet<T> paired_from_manifest(const std::string& manifest, const std::string& kind) {
  auto ds = load_dataset<T>(manifest);
  return {ds.ids, std::move(ds.voxels), ds.targets(kind)};
}

inline nlohmann::json cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
  if (out_dir.empty()) throw ConfigError("synth: --out is required");
  RunConfig resolved = cfg;
  OutputDir out(out_dir, cfg);
  const auto paths = generate_synthetic(cfg.synth, out_dir);
  resolved.data.train_manifest = fs::absolute(paths.train_manifest).lexically_normal().string();
  resolved.data.test_manifest = fs::absolute(paths.test_manifest).lexically_normal().string();
  write_run_config(out.file("run_config.json"), resolved);
  const nlohmann::json report = {{"train_manifest", resolved.data.train_manifest},
                                 {"test_manifest", resolved.data.test_manifest}};
  out.write_json("synth_report.json", report);
  out.finish();
  return report;
}

// Writes <out>/loss.csv, <out>/checkpoint (best by eval, or by train loss
// without an eval split), <out>/last and <out>/train_report.json.
inline nlohmann::json cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (out_dir.empty()) throw ConfigError("train: --out is required");
  if (cfg.data.train_manifest.empty()) throw ConfigError("train: data.train_manifest is not set");
  const auto kind = cfg.target_kind();
  const auto train_set = paired_from_manifest<float>(cfg.data.train_manifest, kind);
  std::optional<PairedSet<float>> eval_set;
  if (!cfg.data.test_manifest.empty()) eval_set = paired_from_manifest<float>(cfg.data.test_manifest, kind);

  OutputDir out(out_dir, cfg);
  std::ofstream csv(out.file("loss.csv"), std::ios::trunc);
  if (!csv) throw DataError("cannot write " + out.file("loss.csv"));
  csv << loss_csv_header() << std::flush;

  auto model = init_model<float>(cfg);
  save_checkpoint(out.file("checkpoint"), model, cfg, 0);
  auto on_epoch = [&](const EpochLog& log, bool improved, const LiteMindModel<float>& m) {
    csv << loss_csv_row(log) << std::flush;
    if (improved) save_checkpoint(out.file("checkpoint"), m, cfg, log.epoch);
  };
  const auto result = train<float>(std::move(model), train_set, eval_set ? &*eval_set : nullptr, cfg, on_epoch);
  save_checkpoint(out.file("last"), result.last, cfg, cfg.train.epochs);

  nlohmann::json report = {{"epochs", cfg.train.epochs},
                           {"best_epoch", result.best_epoch},
                           {"train_pairs", train_set.size()},
                           {"eval_pairs", eval_set ? eval_set->size() : 0},
                           {"params", result.last.param_count()}};
  if (!result.curve.empty()) {
    const auto& e = result.curve.back();
    report["final_train_loss"] = e.train_loss;
    if (e.has_eval) report["final_eval_top1"] = {e.eval_top1_fwd, e.eval_top1_bwd};
  }
  out.write_json("train_report.json", report);
  out.finish();
  return report;
}

struct EvalInputs {
  std::string checkpoint;  // embeds data.test_manifest with this model
  std::string voxel_embeddings, image_embeddings, ids_file;  // or precomputed stores
};

inline nlohmann::json cmd_eval(const RunConfig& cfg, const EvalInputs& in, const std::string& out_dir) {
  EmbeddingStore<float> F, V;
  if (!in.checkpoint.empty()) {
    const auto ck = load_checkpoint<float>(in.checkpoint);
    if (cfg.data.test_manifest.empty()) throw ConfigError("eval: data.test_manifest is not set");
    const auto set = paired_from_manifest<float>(cfg.data.test_manifest, ck.config.target_kind());
    F = EmbeddingStore<float>(set.ids, embed_all(ck.model.backbone, set.x, cfg.eval.threads));
    V = EmbeddingStore<float>(set.ids, set.targets);
  } else {
    if (in.voxel_embeddings.empty() || in.image_embeddings.empty() || in.ids_file.empty()) {
      throw ConfigError("eval: give --checkpoint or all of --voxel-embeddings, --image-embeddings, --ids");
    }
    const auto ids = read_id_list(in.ids_file);
    F = EmbeddingStore<float>(ids, read_tensor<float>(in.voxel_embeddings));
    V = EmbeddingStore<float>(ids, read_tensor<float>(in.image_embeddings));
  }
  OutputDir out(out_dir, cfg);
  const auto pool = eval_pool_retrieval(F, V, cfg.eval);
  const auto full = full_rank_retrieval(F, V, cfg.eval.top_k, cfg.eval.threads);
  nlohmann::json full_j = nlohmann::json::object();
  for (const auto* r : {&full.image, &full.brain}) {
    nlohmann::json topk = nlohmann::json::object();
    for (const auto& [k, v] : r->topk) topk[std::to_string(k)] = v;
    full_j[r->direction] = topk;
  }
  const nlohmann::json report = {{"pool", to_json(pool)}, {"full_rank", full_j}, {"n", F.size()}};
  out.write_json("eval_report.json", report);
  out.finish();
  return report;
}

struct RetrieveInputs {
  std::string hidden_checkpoint;  // backbone producing f_hidden
  std::string cls_checkpoint;     // cls backbone + projector
  std::string index_manifest;     // dataset manifest whose cls store seeds the index
  std::string save_index;         // optional snapshot of that index
};

inline KnnIndex<float> index_from(const RunConfig& cfg, const std::string& manifest) {
  if (!cfg.retrieve.index_dir.empty()) return load_knn_index<float>(cfg.retrieve.index_dir);
  if (manifest.empty()) throw ConfigError("need retrieve.index_dir or an index manifest");
  return KnnIndex<float>(load_dataset<float>(manifest).store("cls"));
}

// For every test stimulus: stage-1 KNN on the projected CLS embedding (local
// index or remote endpoint), stage-2 re-rank by hidden-layer cosine.
inline nlohmann::json cmd_retrieve(const RunConfig& cfg, const RetrieveInputs& in, const std::string& out_dir) {
  if (in.hidden_checkpoint.empty() || in.cls_checkpoint.empty()) {
    throw ConfigError("retrieve: --hidden-checkpoint and --cls-checkpoint are required");
  }
  if (cfg.data.test_manifest.empty()) throw ConfigError("retrieve: data.test_manifest is not set");
  const auto hid = load_checkpoint<float>(in.hidden_checkpoint);
  const auto cls = load_checkpoint<float>(in.cls_checkpoint);
  if (!cls.model.projector) throw ConfigError("retrieve: the cls checkpoint has no projector (train with alpha > 0)");
  const auto ds = load_dataset<float>(cfg.data.test_manifest);
  const auto& hidden_store = ds.store("hidden");

  std::optional<KnnIndex<float>> index;
  if (cfg.retrieve.endpoint.empty()) {
    index = index_from(cfg, in.index_manifest.empty() ? cfg.data.test_manifest : in.index_manifest);
    if (!in.save_index.empty()) save_knn_index(*index, in.save_index);
  }
  OutputDir out(out_dir, cfg);
  const auto Fh = embed_all(hid.model.backbone, ds.voxels, cfg.eval.threads);
  const auto Fc = embed_all(cls.model.backbone, ds.voxels, cfg.eval.threads);
  const auto projected = project_cls(Fc, *cls.model.projector);
  nlohmann::json rows = nlohmann::json::array();
  std::size_t hits = 0, stage1_hits = 0;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const auto q = projected.row(s);
    KnnResult cands = index ? knn_search<float>(*index, q, cfg.retrieve.candidates)
                            : remote_knn_search<float>(cfg.retrieve.endpoint, q, cfg.retrieve.candidates,
                                                       {cfg.retrieve.timeout_seconds});
    const auto r = two_stage_select<float>(Fh.row(s), std::move(cands), hidden_store);
    hits += r.best_id == ds.ids[s] ? 1 : 0;
    stage1_hits += r.candidates.front().id == ds.ids[s] ? 1 : 0;
    rows.push_back({{"query", ds.ids[s]}, {"best_id", r.best_id}, {"best_score", r.best_score},
                    {"candidates", to_json(r.candidates)["results"]}});
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, ds.size()));
  const nlohmann::json report = {{"n", ds.size()},
                                 {"candidates", cfg.retrieve.candidates},
                                 {"top1", static_cast<double>(hits) / n},
                                 {"stage1_top1", static_cast<double>(stage1_hits) / n},
                                 {"queries", rows}};
  out.write_json("retrieve_report.json", report);
  out.finish();
  return report;
}

inline nlohmann::json cmd_classify(const RunConfig& cfg, const std::string& checkpoint, const std::string& out_dir) {
  if (checkpoint.empty()) throw ConfigError("classify: --checkpoint is required");
  if (cfg.data.test_manifest.empty()) throw ConfigError("classify: data.test_manifest is not set");
  const auto ck = load_checkpoint<float>(checkpoint);
  const auto ds = load_dataset<float>(cfg.data.test_manifest);
  if (ds.labels.empty()) throw DataError(cfg.data.test_manifest + ": classify needs labels");
  const auto kind = ck.config.target_kind();
  const auto& images = ds.store(kind);
  const auto& classes = ds.store("text");
  if (classes.width() != images.width()) {
    throw DataError("classify: text embeddings have width " + std::to_string(classes.width()) + " but '" + kind +
                    "' image embeddings have width " + std::to_string(images.width()));
  }
  OutputDir out(out_dir, cfg);
  EmbeddingStore<float> F(ds.ids, embed_all(ck.model.backbone, ds.voxels, cfg.eval.threads));
  const auto report = to_json(zero_shot_evaluate(F, ds.labels, images, classes));
  out.write_json("classify_report.json", report);
  out.finish();
  return report;
}

struct GradCheckOutcome {
  nlohmann::json report;
  bool pass = false;
};

// Double-precision finite-difference check of the configured backbone on a
// random batch of 3 (parameters ~ 0.5 N(0, 1) from train.seed).
inline GradCheckOutcome cmd_gradcheck(const RunConfig& cfg, double tolerance, const std::string& out_dir) {
  cfg.validate();
  auto m = make_zero_backbone<double>(cfg.backbone);
  if (m.param_count() > 20000) {
    throw ConfigError("gradcheck: " + std::to_string(m.param_count()) + " parameters is too many for O(P) checks");
  }
  SplitMix64 rng(cfg.train.seed);
  m.visit([&](const std::string&, const Shape&, std::vector<double>& v) {
    for (auto& x : v) x = 0.5 * rng.normal();
  });
  CheckBatch<double> batch;
  batch.x = RealTensor<double>({3, cfg.backbone.voxel_len});
  batch.target = RealTensor<double>({3, cfg.backbone.output_size()});
  for (auto& v : batch.x.data) v = rng.normal();
  for (auto& v : batch.target.data) v = rng.normal();
  batch.loss = cfg.loss;
  GradCheckOptions opt;
  opt.tolerance = tolerance;
  const auto rep = check_backbone(m, batch, opt);

  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : rep.params) {
    params.push_back({{"name", p.name},
                      {"max_rel_err", p.max_rel_err},
                      {"worst_index", p.worst_index},
                      {"analytic", p.analytic},
                      {"numeric", p.numeric},
                      {"nonsmooth", p.nonsmooth}});
  }
  GradCheckOutcome o;
  o.pass = rep.pass;
  o.report = {{"pass", rep.pass},
              {"tolerance", rep.tolerance},
              {"max_rel_err", rep.max_rel_err},
              {"worst", rep.worst_coordinate()},
              {"nonsmooth", rep.nonsmooth},
              {"param_count", m.param_count()},
              {"params", params}};
  OutputDir out(out_dir, cfg);
  out.write_json("gradcheck_report.json", o.report);
  out.finish();
  return o;
}

inline nlohmann::json cmd_params(const RunConfig& cfg) {
  cfg.backbone.validate();
  const auto p = param_breakdown(cfg.backbone);
  const auto f = flops_estimate(cfg.backbone);
  nlohmann::json j = {
      {"params",
       {{"total", p.total},
        {"embedder", p.embedder},
        {"per_block", p.per_block},
        {"blocks", p.blocks},
        {"projector", p.projector}}},
      {"flops_estimate",
       {{"total", f.total},
        {"patch_embed", f.patch_embed},
        {"per_block", f.per_block},
        {"blocks", f.blocks},
        {"projector", f.projector}}},
      {"n_tokens", cfg.backbone.n_tokens()},
      {"output_shape", {cfg.backbone.out_tokens, cfg.backbone.out_dim}},
  };
  if (cfg.uses_projector()) {
    j["cls_projector_params"] = make_zero_projector<float>(cfg.projector).param_count();
  }
  return j;
}

}  // namespace litemind::cli
