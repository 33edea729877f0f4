#pragma once

// Dataset manifests.
//
// {
//   "subject": "subj01", "split": "train" | "test", "voxel_len": 15724,
//   "records": [{"stimulus_id": "...", "voxel_file": "...", "trial_index": 0}, ...],
//   "embeddings": {
//     "hidden": {"ids_file": "...", "tensor": "..."},   // any subset of
//     "cls":    {"ids_file": "...", "tensor": "..."},   // hidden / cls / text
//     "text":   {"ids_file": "...", "tensor": "..."}
//   },
//   "labels": {"<stimulus_id>": <class index>, ...}      // optional
// }
//
// voxel_file is a 2-D tensor of trials x voxel_len and trial_index selects a
// row. Relative paths resolve against the manifest's directory. Test splits
// are averaged per stimulus; train trials stay individual samples.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "litemind/data/tensor_file.hpp"
#include "litemind/retrieval/store.hpp"

namespace litemind {

struct ManifestRecord {
  std::string stimulus_id;
  std::string voxel_file;
  std::size_t trial_index = 0;
};

struct EmbeddingRef {
  std::string ids_file;
  std::string tensor;
};

struct DatasetManifest {
  std::string subject;
  std::string split;
  std::size_t voxel_len = 0;
  std::vector<ManifestRecord> records;
  std::map<std::string, EmbeddingRef> embeddings;  // keyed hidden / cls / text
  std::map<std::string, std::size_t> labels;
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : m.records) {
    recs.push_back({{"stimulus_id", r.stimulus_id}, {"voxel_file", r.voxel_file}, {"trial_index", r.trial_index}});
  }
  nlohmann::json emb = nlohmann::json::object();
  for (const auto& [k, e] : m.embeddings) emb[k] = {{"ids_file", e.ids_file}, {"tensor", e.tensor}};
  nlohmann::json j = {{"subject", m.subject}, {"split", m.split},      {"voxel_len", m.voxel_len},
                      {"records", recs},      {"embeddings", emb}};
  if (!m.labels.empty()) j["labels"] = m.labels;
  return j;
}

namespace detail {

template <typename V>
V manifest_field(const nlohmann::json& j, const char* key, const std::string& origin) {
  if (!j.contains(key)) throw DataError(origin + ": missing field '" + key + "'");
  try {
    return j.at(key).get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

}  // namespace detail

inline DatasetManifest parse_manifest(const nlohmann::json& j, const std::string& origin = "manifest") {
  DatasetManifest m;
  if (!j.is_object()) throw DataError(origin + ": top level must be an object");
  m.subject = detail::manifest_field<std::string>(j, "subject", origin);
  m.split = detail::manifest_field<std::string>(j, "split", origin);
  if (m.split != "train" && m.split != "test") {
    throw DataError(origin + ": field 'split' must be train or test, got '" + m.split + "'");
  }
  m.voxel_len = detail::manifest_field<std::size_t>(j, "voxel_len", origin);
  if (m.voxel_len == 0) throw DataError(origin + ": field 'voxel_len' must be >= 1");
  const auto recs = detail::manifest_field<nlohmann::json>(j, "records", origin);
  if (!recs.is_array()) throw DataError(origin + ": field 'records' must be an array");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string where = origin + ": records[" + std::to_string(i) + "]";
    m.records.push_back({detail::manifest_field<std::string>(recs[i], "stimulus_id", where),
                         detail::manifest_field<std::string>(recs[i], "voxel_file", where),
                         detail::manifest_field<std::size_t>(recs[i], "trial_index", where)});
  }
  if (j.contains("embeddings")) {
    for (const auto& [k, v] : j.at("embeddings").items()) {
      if (k != "hidden" && k != "cls" && k != "text") {
        throw DataError(origin + ": unknown embedding kind '" + k + "' (expected hidden|cls|text)");
      }
      const std::string where = origin + ": embeddings." + k;
      m.embeddings[k] = {detail::manifest_field<std::string>(v, "ids_file", where),
                         detail::manifest_field<std::string>(v, "tensor", where)};
    }
  }
  if (j.contains("labels")) {
    for (const auto& [k, v] : j.at("labels").items()) {
      if (!v.is_number_unsigned()) throw DataError(origin + ": labels." + k + " must be a nonnegative integer");
      m.labels[k] = v.get<std::size_t>();
    }
  }
  return m;
}

inline DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_manifest(j, path);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

inline void write_manifest(const std::string& path, const DatasetManifest& m) {
  write_text(path, to_json(m).dump(2) + "\n");
}

inline std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open id list " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

inline void write_id_list(const std::string& path, const std::vector<std::string>& ids) {
  std::string text;
  for (const auto& id : ids) text += id + "\n";
  write_text(path, text);
}

// Elementwise mean of equal-length trials.
template <typename T>
std::vector<T> average_trials(const std::vector<std::vector<T>>& trials) {
  if (trials.empty()) throw DataError("average_trials: no trials");
  const std::size_t n = trials.front().size();
  std::vector<double> acc(n, 0.0);
  for (const auto& t : trials) {
    if (t.size() != n) {
      throw DataError("average_trials: trial length " + std::to_string(t.size()) + " vs " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) acc[i] += t[i];
  }
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<T>(acc[i] / static_cast<double>(trials.size()));
  return out;
}

template <typename T>
struct Dataset {
  std::string subject;
  std::string split;
  std::vector<std::string> ids;  // one per sample; repeats allowed in train
  RealTensor<T> voxels;          // samples x voxel_len
  std::optional<EmbeddingStore<T>> hidden, cls, text;
  std::vector<std::size_t> labels;  // per sample, empty when the manifest has none

  std::size_t size() const { return ids.size(); }

  const EmbeddingStore<T>& store(const std::string& kind) const {
    const auto& s = kind == "hidden" ? hidden : kind == "cls" ? cls : text;
    if (!s) throw DataError("dataset " + subject + "/" + split + " has no '" + kind + "' embeddings");
    return *s;
  }

  // Targets aligned with the samples, rows looked up by stimulus id.
  RealTensor<T> targets(const std::string& kind) const {
    const auto& s = store(kind);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < s.size(); ++i) index.emplace(s.ids[i], i);
    RealTensor<T> out({ids.size(), s.width()});
    for (std::size_t r = 0; r < ids.size(); ++r) {
      auto it = index.find(ids[r]);
      if (it == index.end()) throw DataError("no '" + kind + "' embedding for stimulus '" + ids[r] + "'");
      auto src = s.row(it->second);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
  }
};

template <typename T>
Dataset<T> load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const auto m = read_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };

  Dataset<T> ds;
  ds.subject = m.subject;
  ds.split = m.split;

  std::map<std::string, RealTensor<T>> files;
  auto trial = [&](const ManifestRecord& r, std::size_t i) -> std::vector<T> {
    const std::string path = resolve(r.voxel_file);
    auto it = files.find(path);
    if (it == files.end()) {
      auto t = read_tensor<T>(path);
      if (t.shape.size() == 1) t.shape = {1, t.size()};
      if (t.shape.size() != 2 || t.cols() != m.voxel_len) {
        throw DataError(path + ": voxel tensor " + shape_str(t.shape) + " does not match voxel_len " +
                        std::to_string(m.voxel_len) + " (records[" + std::to_string(i) + "].voxel_file)");
      }
      it = files.emplace(path, std::move(t)).first;
    }
    if (r.trial_index >= it->second.rows()) {
      throw DataError(manifest_path + ": records[" + std::to_string(i) + "].trial_index " +
                      std::to_string(r.trial_index) + " out of range for " + path + " with " +
                      std::to_string(it->second.rows()) + " trials");
    }
    auto row = it->second.row(r.trial_index);
    return {row.begin(), row.end()};
  };

  std::vector<std::vector<T>> rows;
  if (m.split == "train") {
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      ds.ids.push_back(m.records[i].stimulus_id);
      rows.push_back(trial(m.records[i], i));
    }
  } else {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::vector<T>>> groups;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      const auto& id = m.records[i].stimulus_id;
      if (!groups.count(id)) order.push_back(id);
      groups[id].push_back(trial(m.records[i], i));
    }
    for (const auto& id : order) {
      ds.ids.push_back(id);
      rows.push_back(average_trials(groups[id]));
    }
  }
  ds.voxels = RealTensor<T>({rows.size(), m.voxel_len});
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), ds.voxels.row(r).begin());

  for (const auto& [kind, ref] : m.embeddings) {
    auto ids = read_id_list(resolve(ref.ids_file));
    auto t = read_tensor<T>(resolve(ref.tensor));
    if (t.shape.empty() || t.shape[0] != ids.size()) {
      throw DataError(resolve(ref.tensor) + ": embeddings." + kind + " tensor " + shape_str(t.shape) +
                      " does not match " + std::to_string(ids.size()) + " ids in " + resolve(ref.ids_file));
    }
    EmbeddingStore<T> store(std::move(ids), std::move(t));
    if (kind == "hidden") ds.hidden = std::move(store);
    else if (kind == "cls") ds.cls = std::move(store);
    else ds.text = std::move(store);
  }
  for (const char* kind : {"hidden", "cls"}) {
    const auto& s = std::string(kind) == "hidden" ? ds.hidden : ds.cls;
    if (!s) continue;
    std::unordered_map<std::string, bool> have;
    for (const auto& id : s->ids) have[id] = true;
    for (const auto& id : ds.ids) {
      if (!have.count(id)) {
        throw DataError(manifest_path + ": embeddings." + kind + " lacks stimulus '" + id + "'");
      }
    }
  }
  if (!m.labels.empty()) {
    for (const auto& id : ds.ids) {
      auto it = m.labels.find(id);
      if (it == m.labels.end()) throw DataError(manifest_path + ": labels lacks stimulus '" + id + "'");
      ds.labels.push_back(it->second);
    }
  }
  return ds;
}

}  // namespace litemind
