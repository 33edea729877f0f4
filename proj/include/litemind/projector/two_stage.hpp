#pragma once

// Two-stage retrieval: KNN on the projected CLS embedding gives k candidates,
// then the candidate whose final-hidden-layer embedding is most cosine-similar
// to the voxel hidden embedding wins. Ties keep the earlier candidate.

#include <limits>
#include <unordered_map>

#include "litemind/projector/cls_projector.hpp"
#include "litemind/projector/knn.hpp"

namespace litemind {

struct TwoStageResult {
  std::string best_id;
  double best_score = 0.0;  // hidden-space cosine of the winner
  KnnResult candidates;     // stage-1 list
};

template <typename T>
TwoStageResult two_stage_select(std::span<const T> f_hidden, KnnResult candidates,
                                const EmbeddingStore<T>& hidden_store) {
  if (candidates.empty()) throw DataError("two_stage: no candidates");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < hidden_store.size(); ++i) index.emplace(hidden_store.ids[i], i);
  TwoStageResult out;
  out.best_score = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    auto it = index.find(c.id);
    if (it == index.end()) throw DataError("two_stage: candidate '" + c.id + "' missing from the hidden store");
    const double s = cosine_sim<T>(f_hidden, hidden_store.row(it->second));
    if (s > out.best_score) {
      out.best_score = s;
      out.best_id = c.id;
    }
  }
  out.candidates = std::move(candidates);
  return out;
}

template <typename T>
TwoStageResult two_stage_retrieve(std::span<const T> f_hidden, std::span<const T> f_cls, const ClsProjector<T>& p,
                                  const KnnIndex<T>& idx, const EmbeddingStore<T>& hidden_store,
                                  std::size_t k = 16) {
  const auto projected = project_cls<T>(f_cls, p);
  return two_stage_select<T>(f_hidden, knn_search<T>(idx, projected, k), hidden_store);
}

}  // namespace litemind
