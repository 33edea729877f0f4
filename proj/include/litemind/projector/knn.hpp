#pragma once

// Exact cosine KNN over unit-normalized rows, plus the JSON wire types shared
// with the remote client and server:
//
//   query:  {"embedding": [...], "k": 16, "metric": "cosine"}
//   result: {"results": [{"id": "...", "score": 0.97}, ...]}
//
// Results are sorted by score descending, ties by ascending id.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "litemind/data/dataset.hpp"
#include "litemind/data/tensor_file.hpp"
#include "litemind/retrieval/store.hpp"

namespace litemind {

struct KnnHit {
  std::string id;
  double score = 0.0;

  bool operator==(const KnnHit&) const = default;
};

using KnnResult = std::vector<KnnHit>;

template <typename T>
struct KnnQuery {
  std::vector<T> embedding;
  std::size_t k = 16;
};

template <typename T>
class KnnIndex {
 public:
  KnnIndex() = default;

  // Rows are normalized on build; zero rows are rejected.
  KnnIndex(std::vector<std::string> ids, RealTensor<T> matrix) {
    EmbeddingStore<T> raw(std::move(ids), std::move(matrix));
    for (std::size_t r = 0; r < raw.size(); ++r) {
      bool zero = true;
      for (T v : raw.row(r)) zero = zero && v == T{0};
      if (zero) throw DataError("knn index: row '" + raw.ids[r] + "' has zero norm");
    }
    store_ = raw.normalized_copy();
    store_.validate();
  }

  explicit KnnIndex(const EmbeddingStore<T>& store) : KnnIndex(store.ids, store.matrix) {}

  // Adopts rows that are already unit norm (a saved index) without
  // renormalizing, so a snapshot reloads bit-identical.
  static KnnIndex from_normalized(EmbeddingStore<T> store) {
    store.validate();
    for (std::size_t r = 0; r < store.size(); ++r) {
      double sq = 0.0;
      for (T v : store.row(r)) sq += static_cast<double>(v) * static_cast<double>(v);
      if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) {
        throw DataError("knn index: row '" + store.ids[r] + "' is not unit norm (" + std::to_string(std::sqrt(sq)) +
                        ")");
      }
    }
    KnnIndex idx;
    idx.store_ = std::move(store);
    return idx;
  }

  std::size_t size() const { return store_.size(); }
  std::size_t dim() const { return store_.width(); }
  const std::vector<std::string>& ids() const { return store_.ids; }
  const EmbeddingStore<T>& store() const { return store_; }

 private:
  EmbeddingStore<T> store_;
};

inline bool knn_before(const KnnHit& a, const KnnHit& b) {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

template <typename T>
KnnResult knn_search(const KnnIndex<T>& idx, std::span<const T> q, std::size_t k) {
  if (k < 1) throw ConfigError("knn: k must be >= 1");
  if (idx.size() == 0) throw DataError("knn: empty index");
  if (q.size() != idx.dim()) {
    throw DataError("knn: query dim " + std::to_string(q.size()) + " vs index dim " + std::to_string(idx.dim()));
  }
  double qq = 0.0;
  for (T v : q) qq += static_cast<double>(v) * v;
  if (!std::isfinite(qq)) throw DataError("knn: non-finite query");
  const double inv = qq > 0.0 ? 1.0 / std::sqrt(qq) : 0.0;
  KnnResult all(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto row = idx.store().row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) dot += static_cast<double>(row[c]) * q[c];
    all[r] = {idx.ids()[r], dot * inv};
  }
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), knn_before);
  all.resize(n);
  return all;
}

template <typename T>
nlohmann::json knn_query_json(std::span<const T> embedding, std::size_t k) {
  nlohmann::json e = nlohmann::json::array();
  for (T v : embedding) e.push_back(static_cast<double>(v));
  return {{"embedding", e}, {"k", k}, {"metric", "cosine"}};
}

// Throws DataError (field path in the message) on schema violations.
template <typename T>
KnnQuery<T> parse_knn_query(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("knn query: expected an object");
  if (!j.contains("embedding") || !j["embedding"].is_array()) throw DataError("knn query: missing array 'embedding'");
  if (!j.contains("k") || !j["k"].is_number_integer()) throw DataError("knn query: missing integer 'k'");
  if (j.contains("metric") && j["metric"] != "cosine") throw DataError("knn query: unsupported metric");
  KnnQuery<T> q;
  if (j["k"].get<long long>() < 1) throw DataError("knn query: k must be >= 1");
  q.k = j["k"].get<std::size_t>();
  for (std::size_t i = 0; i < j["embedding"].size(); ++i) {
    const auto& v = j["embedding"][i];
    if (!v.is_number()) throw DataError("knn query: embedding[" + std::to_string(i) + "] is not a number");
    q.embedding.push_back(static_cast<T>(v.get<double>()));
  }
  return q;
}

inline nlohmann::json to_json(const KnnResult& r) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& h : r) out.push_back({{"id", h.id}, {"score", h.score}});
  return {{"results", out}};
}

// Index snapshot: <dir>/index.json + matrix.lmnd + ids.txt.
template <typename T>
void save_knn_index(const KnnIndex<T>& idx, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_tensor((fs::path(dir) / "matrix.lmnd").string(), idx.store().matrix);
  write_id_list((fs::path(dir) / "ids.txt").string(), idx.ids());
  const nlohmann::json m = {{"kind", "knn_index"}, {"metric", "cosine"},       {"count", idx.size()},
                            {"dim", idx.dim()},    {"ids_file", "ids.txt"}, {"tensor", "matrix.lmnd"}};
  write_text((fs::path(dir) / "index.json").string(), m.dump(2) + "\n");
}

template <typename T>
KnnIndex<T> load_knn_index(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = (fs::path(dir) / "index.json").string();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": parse error at byte " + std::to_string(e.byte));
  }
  if (m.value("kind", "") != "knn_index") throw DataError(path + ": not a knn index manifest");
  auto ids = read_id_list((fs::path(dir) / m.value("ids_file", "ids.txt")).string());
  auto t = read_tensor<T>((fs::path(dir) / m.value("tensor", "matrix.lmnd")).string());
  auto idx = KnnIndex<T>::from_normalized(EmbeddingStore<T>(std::move(ids), std::move(t)));
  if (idx.size() != m.value("count", idx.size()) || idx.dim() != m.value("dim", idx.dim())) {
    throw DataError(path + ": count/dim do not match the stored tensor");
  }
  return idx;
}

}  // namespace litemind
