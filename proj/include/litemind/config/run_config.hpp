#pragma once

// Run configuration: one JSON document with optional sections
//
//   backbone, projector, loss, optimizer, train, eval, data, synth, retrieve
//
// Missing fields take their defaults; unknown fields are errors. to_json
// emits every field, so a written config reproduces the run.

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "litemind/backbone/config.hpp"
#include "litemind/data/synthetic.hpp"
#include "litemind/projector/cls_projector.hpp"
#include "litemind/retrieval/retrieval.hpp"
#include "litemind/training/loss.hpp"
#include "litemind/training/optimizer.hpp"

namespace litemind {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 500;
  std::uint64_t seed = 0;
  std::size_t threads = 1;   // 0 = hardware concurrency
  bool log_wall_time = true;  // false writes 0 so loss curves are byte-stable
  std::size_t eval_pool = 300;
  std::size_t eval_seeds = 1;

  void validate() const {
    if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
    if (eval_pool < 2) throw ConfigError("train.eval_pool must be >= 2");
    if (eval_seeds < 1) throw ConfigError("train.eval_seeds must be >= 1");
  }
};

struct DataConfig {
  std::string train_manifest;
  std::string test_manifest;
  std::string target;  // hidden | cls; empty follows backbone.variant
};

struct RetrieveConfig {
  std::size_t candidates = 16;
  std::string index_dir;
  std::string endpoint;  // remote KNN base URL; empty uses the local index
  double timeout_seconds = 10.0;
};

struct RunConfig {
  BackboneConfig backbone;
  ClsProjectorConfig projector;  // used when loss.alpha > 0; dim follows backbone.out_dim
  LossConfig loss;
  OptimizerConfig optimizer;
  TrainConfig train;
  RetrievalProtocol eval;
  DataConfig data;
  SyntheticSpec synth;
  RetrieveConfig retrieve;

  bool uses_projector() const { return loss.alpha > 0.0; }

  std::string target_kind() const {
    return data.target.empty() ? to_string(backbone.variant) : data.target;
  }

  void validate() const {
    backbone.validate();
    loss.validate();
    optimizer.validate();
    train.validate();
    synth.validate();
    if (uses_projector()) {
      if (backbone.variant != Variant::cls) {
        throw ConfigError("loss.alpha > 0 trains the CLS projector and requires backbone.variant = cls");
      }
      if (projector.dim != backbone.out_dim) {
        throw ConfigError("projector.dim (" + std::to_string(projector.dim) + ") must equal backbone.out_dim (" +
                          std::to_string(backbone.out_dim) + ")");
      }
      projector.validate();
    }
    const auto t = target_kind();
    if (t != "hidden" && t != "cls") throw ConfigError("data.target must be hidden or cls");
    if (retrieve.candidates < 1) throw ConfigError("retrieve.candidates must be >= 1");
    if (!(retrieve.timeout_seconds > 0.0)) throw ConfigError("retrieve.timeout_seconds must be > 0");
  }
};

namespace detail {

// Reads fields of one section and rejects keys nobody asked for.
class Section {
 public:
  Section(const nlohmann::json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    j_ = root.at(name);
    if (!j_.is_object()) throw ConfigError("config: '" + name + "' must be an object");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    try {
      if constexpr (std::is_same_v<V, bool>) {
        if (!j_[key].is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_unsigned_v<V>) {
        if (!j_[key].is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<V>) {
        if (!j_[key].is_number()) throw ConfigError("");
      } else {
        if (!j_[key].is_string()) throw ConfigError("");
      }
      out = j_[key].get<V>();
    } catch (const std::exception&) {
      throw ConfigError("config: " + name_ + "." + key + " has the wrong type (" + j_[key].dump() + ")");
    }
  }

  template <typename V>
  void get_vector(const char* key, std::vector<V>& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    if (!j_[key].is_array()) throw ConfigError("config: " + name_ + "." + key + " must be an array");
    try {
      out = j_[key].get<std::vector<V>>();
    } catch (const std::exception&) {
      throw ConfigError("config: " + name_ + "." + key + " has the wrong element type");
    }
  }

  void finish() const {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("config: unknown field " + name_ + "." + k);
  }

 private:
  std::string name_;
  nlohmann::json j_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  const auto& b = c.backbone;
  return {
      {"backbone",
       {{"voxel_len", b.voxel_len},
        {"patch_size", b.patch_size},
        {"embed_dim", b.embed_dim},
        {"depth", b.depth},
        {"filter_count", b.filter_count},
        {"out_tokens", b.out_tokens},
        {"out_dim", b.out_dim},
        {"variant", to_string(b.variant)},
        {"activation_slope", b.activation_slope},
        {"mlp_hidden", b.mlp_hidden},
        {"residual", b.residual},
        {"layer_norm", b.layer_norm},
        {"norm_eps", b.norm_eps}}},
      {"projector", {{"dim", c.projector.dim}, {"blocks", c.projector.blocks}, {"norm_eps", c.projector.norm_eps}}},
      {"loss", {{"tau", c.loss.tau}, {"alpha", c.loss.alpha}, {"direction", to_string(c.loss.direction)}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps},
        {"weight_decay", c.optimizer.weight_decay},
        {"warmup_steps", c.optimizer.warmup_steps}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"seed", c.train.seed},
        {"threads", c.train.threads},
        {"log_wall_time", c.train.log_wall_time},
        {"eval_pool", c.train.eval_pool},
        {"eval_seeds", c.train.eval_seeds}}},
      {"eval",
       {{"pool_size", c.eval.pool_size},
        {"n_seeds", c.eval.n_seeds},
        {"base_seed", c.eval.base_seed},
        {"top_k", c.eval.top_k},
        {"threads", c.eval.threads}}},
      {"data",
       {{"train_manifest", c.data.train_manifest},
        {"test_manifest", c.data.test_manifest},
        {"target", c.data.target}}},
      {"synth",
       {{"n_train", c.synth.n_train},
        {"n_test", c.synth.n_test},
        {"test_trials", c.synth.test_trials},
        {"voxel_len", c.synth.voxel_len},
        {"embed_tokens", c.synth.embed_tokens},
        {"embed_dim", c.synth.embed_dim},
        {"noise_sigma", c.synth.noise_sigma},
        {"map_seed", c.synth.map_seed},
        {"noise_seed", c.synth.noise_seed},
        {"class_count", c.synth.class_count},
        {"class_spread", c.synth.class_spread}}},
      {"retrieve",
       {{"candidates", c.retrieve.candidates},
        {"index_dir", c.retrieve.index_dir},
        {"endpoint", c.retrieve.endpoint},
        {"timeout_seconds", c.retrieve.timeout_seconds}}},
  };
}

// Overlays j onto base (so a partial document keeps base's other values).
inline RunConfig parse_run_config(const nlohmann::json& j, RunConfig c = {}) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> sections = {"backbone", "projector", "loss",  "optimizer", "train",
                                                 "eval",     "data",      "synth", "retrieve"};
  for (const auto& [k, v] : j.items())
    if (!sections.count(k)) throw ConfigError("config: unknown section '" + k + "'");

  detail::Section b(j, "backbone");
  auto& bb = c.backbone;
  std::string variant = to_string(bb.variant);
  b.get("voxel_len", bb.voxel_len);
  b.get("patch_size", bb.patch_size);
  b.get("embed_dim", bb.embed_dim);
  b.get("depth", bb.depth);
  b.get("filter_count", bb.filter_count);
  b.get("out_tokens", bb.out_tokens);
  b.get("out_dim", bb.out_dim);
  b.get("variant", variant);
  b.get("activation_slope", bb.activation_slope);
  b.get("mlp_hidden", bb.mlp_hidden);
  b.get("residual", bb.residual);
  b.get("layer_norm", bb.layer_norm);
  b.get("norm_eps", bb.norm_eps);
  b.finish();
  bb.variant = parse_variant(variant);

  detail::Section p(j, "projector");
  if (!j.contains("projector") || !j["projector"].contains("dim")) c.projector.dim = bb.out_dim;
  p.get("dim", c.projector.dim);
  p.get("blocks", c.projector.blocks);
  p.get("norm_eps", c.projector.norm_eps);
  p.finish();

  detail::Section l(j, "loss");
  std::string direction = to_string(c.loss.direction);
  l.get("tau", c.loss.tau);
  l.get("alpha", c.loss.alpha);
  l.get("direction", direction);
  l.finish();
  c.loss.direction = parse_direction(direction);

  detail::Section o(j, "optimizer");
  o.get("lr", c.optimizer.lr);
  o.get("beta1", c.optimizer.beta1);
  o.get("beta2", c.optimizer.beta2);
  o.get("eps", c.optimizer.eps);
  o.get("weight_decay", c.optimizer.weight_decay);
  o.get("warmup_steps", c.optimizer.warmup_steps);
  o.finish();

  detail::Section t(j, "train");
  t.get("epochs", c.train.epochs);
  t.get("batch_size", c.train.batch_size);
  t.get("seed", c.train.seed);
  t.get("threads", c.train.threads);
  t.get("log_wall_time", c.train.log_wall_time);
  t.get("eval_pool", c.train.eval_pool);
  t.get("eval_seeds", c.train.eval_seeds);
  t.finish();

  detail::Section e(j, "eval");
  e.get("pool_size", c.eval.pool_size);
  e.get("n_seeds", c.eval.n_seeds);
  e.get("base_seed", c.eval.base_seed);
  e.get_vector("top_k", c.eval.top_k);
  e.get("threads", c.eval.threads);
  e.finish();

  detail::Section d(j, "data");
  d.get("train_manifest", c.data.train_manifest);
  d.get("test_manifest", c.data.test_manifest);
  d.get("target", c.data.target);
  d.finish();

  detail::Section s(j, "synth");
  s.get("n_train", c.synth.n_train);
  s.get("n_test", c.synth.n_test);
  s.get("test_trials", c.synth.test_trials);
  s.get("voxel_len", c.synth.voxel_len);
  s.get("embed_tokens", c.synth.embed_tokens);
  s.get("embed_dim", c.synth.embed_dim);
  s.get("noise_sigma", c.synth.noise_sigma);
  s.get("map_seed", c.synth.map_seed);
  s.get("noise_seed", c.synth.noise_seed);
  s.get("class_count", c.synth.class_count);
  s.get("class_spread", c.synth.class_spread);
  s.finish();

  detail::Section r(j, "retrieve");
  r.get("candidates", c.retrieve.candidates);
  r.get("index_dir", c.retrieve.index_dir);
  r.get("endpoint", c.retrieve.endpoint);
  r.get("timeout_seconds", c.retrieve.timeout_seconds);
  r.finish();
  return c;
}

// Relative manifest paths in a config file resolve against its directory and
// are stored absolute, so a written run_config.json can be read from anywhere.
inline RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error at byte " + std::to_string(e.byte));
  }
  auto c = parse_run_config(j);
  const auto base = std::filesystem::path(path).parent_path();
  for (auto* p : {&c.data.train_manifest, &c.data.test_manifest, &c.retrieve.index_dir}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = std::filesystem::absolute(base / *p).lexically_normal().string();
  }
  return c;
}

inline void write_run_config(const std::string& path, const RunConfig& c) {
  write_text(path, to_json(c).dump(2) + "\n");
}

}  // namespace litemind
