#pragma once

// Checkpoint directory:
//
//   manifest.json        {"format": "litemind-checkpoint", "version": 1,
//                         "epoch", "config": <RunConfig>, "params": [{"name", "shape", "file"}]}
//   params/<name>.lmnd   one tensor per parameter, in visiting order

#include <filesystem>

#include "json.hpp"

#include "litemind/config/run_config.hpp"
#include "litemind/data/tensor_file.hpp"
#include "litemind/training/trainer.hpp"

namespace litemind {

template <typename T>
void save_checkpoint(const std::string& dir, const LiteMindModel<T>& m, const RunConfig& cfg, std::size_t epoch) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "params");
  nlohmann::json params = nlohmann::json::array();
  m.visit([&](const std::string& name, const Shape& shape, const std::vector<T>& v) {
    const std::string file = "params/" + name + ".lmnd";
    write_tensor((fs::path(dir) / file).string(), RealTensor<T>(shape, v));
    params.push_back({{"name", name}, {"shape", shape}, {"file", file}});
  });
  const nlohmann::json manifest = {{"format", "litemind-checkpoint"},
                                   {"version", 1},
                                   {"epoch", epoch},
                                   {"dtype", std::is_same_v<T, float> ? "f32" : "f64"},
                                   {"config", to_json(cfg)},
                                   {"params", params}};
  write_text((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

template <typename T>
struct Checkpoint {
  RunConfig config;
  std::size_t epoch = 0;
  LiteMindModel<T> model;
};

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = (fs::path(dir) / "manifest.json").string();
  if (fs::exists(fs::path(dir) / "INCOMPLETE")) throw DataError(dir + " is marked INCOMPLETE");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint manifest " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": parse error at byte " + std::to_string(e.byte));
  }
  if (j.value("format", "") != "litemind-checkpoint") throw DataError(path + ": not a checkpoint manifest");
  Checkpoint<T> ck;
  ck.config = parse_run_config(j.at("config"));
  ck.config.validate();
  ck.epoch = j.value("epoch", std::size_t{0});
  ck.model.backbone = make_zero_backbone<T>(ck.config.backbone);
  if (ck.config.uses_projector()) ck.model.projector = make_zero_projector<T>(ck.config.projector);
  const auto& params = j.at("params");
  std::size_t k = 0;
  ck.model.visit([&](const std::string& name, const Shape& shape, std::vector<T>& v) {
    if (k >= params.size() || params[k].at("name") != name) {
      throw DataError(path + ": params[" + std::to_string(k) + "] should be " + name);
    }
    const auto file = (fs::path(dir) / params[k].at("file").get<std::string>()).string();
    auto t = read_tensor<T>(file);
    if (t.shape != shape) {
      throw DataError(file + ": shape " + shape_str(t.shape) + " does not match " + name + " " + shape_str(shape));
    }
    v = std::move(t.data);
    ++k;
  });
  if (k != params.size()) throw DataError(path + ": " + std::to_string(params.size() - k) + " extra parameters");
  return ck;
}

}  // namespace litemind
