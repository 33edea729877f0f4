#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "litemind/error.hpp"
#include "litemind/numerics/tensor.hpp"

namespace litemind {

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // a zero-norm operand; value forced to 0
};

// a.b / (|a||b|), accumulated in double.
template <typename T>
CosineResult cosine_sim_checked(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine_sim: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0), false};
}

template <typename T>
double cosine_sim(std::span<const T> a, std::span<const T> b) {
  return cosine_sim_checked(a, b).value;
}

// Row store of embeddings keyed by stimulus id.
template <typename T>
struct EmbeddingStore {
  std::vector<std::string> ids;
  RealTensor<T> matrix;  // count x width
  bool normalized = false;

  EmbeddingStore() = default;
  EmbeddingStore(std::vector<std::string> id_list, RealTensor<T> m) : ids(std::move(id_list)), matrix(std::move(m)) {
    if (matrix.shape.size() == 1) matrix.shape = {1, matrix.size()};
    if (matrix.shape.size() > 2) matrix.shape = {matrix.shape[0], matrix.size() / matrix.shape[0]};
    validate();
  }

  std::size_t size() const { return ids.size(); }
  std::size_t width() const { return matrix.cols(); }
  std::span<const T> row(std::size_t i) const { return matrix.row(i); }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return i;
    throw DataError("embedding store: unknown id '" + id + "'");
  }

  void validate() const {
    if (matrix.rows() != ids.size()) {
      throw DataError("embedding store: " + std::to_string(ids.size()) + " ids but " +
                      std::to_string(matrix.rows()) + " rows");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids)
      if (!seen.insert(id).second) throw DataError("embedding store: duplicate id '" + id + "'");
    if (!matrix.all_finite()) throw DataError("embedding store: non-finite entries");
    if (normalized) {
      for (std::size_t r = 0; r < size(); ++r) {
        double sq = 0.0;
        for (T v : row(r)) sq += static_cast<double>(v) * v;
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-5) {
          throw DataError("embedding store: row '" + ids[r] + "' is not unit-norm");
        }
      }
    }
  }

  // Unit-normalizes every row; zero rows are left at zero.
  EmbeddingStore normalized_copy() const {
    EmbeddingStore out = *this;
    for (std::size_t r = 0; r < size(); ++r) {
      auto row_span = out.matrix.row(r);
      double sq = 0.0;
      for (T v : row_span) sq += static_cast<double>(v) * v;
      if (sq == 0.0) continue;
      const double inv = 1.0 / std::sqrt(sq);
      for (T& v : row_span) v = static_cast<T>(v * inv);
    }
    out.normalized = true;
    return out;
  }
};

}  // namespace litemind
