#pragma once

// Retrieval evaluation over paired stores F (voxel side) and V (image side),
// row s of F paired with row s of V.
//
// Pool protocol: for every query s and seed k, pool_size - 1 distractors are
// drawn from the other N - 1 items; a query is a hit iff its partner scores
// strictly above every distractor (ties count as misses).
//
// Distractor draw for seed k: one SplitMix64(base_seed + k) stream, consumed
// by queries s = 0..N-1 in order. Per query the candidates are the other
// indices in ascending order (m = N - 1 of them) and a Fisher-Yates prefix of
// length pool_size - 1 is taken: j = i + next() % (m - i), swap(c[i], c[j]).
// Both directions reuse the same pools.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "litemind/parallel.hpp"
#include "litemind/random.hpp"
#include "litemind/retrieval/store.hpp"

namespace litemind {

struct RetrievalProtocol {
  std::size_t pool_size = 300;
  std::size_t n_seeds = 30;
  std::uint64_t base_seed = 0;
  std::vector<std::size_t> top_k = {1, 5};
  std::size_t threads = 1;

  void validate(std::size_t n) const {
    if (pool_size < 2) throw ConfigError("retrieval.pool_size must be >= 2");
    if (pool_size > n) {
      throw DataError("retrieval: pool size " + std::to_string(pool_size) + " exceeds store size " +
                      std::to_string(n));
    }
    if (n_seeds < 1) throw ConfigError("retrieval.n_seeds must be >= 1");
    for (auto k : top_k)
      if (k < 1) throw ConfigError("retrieval.top_k entries must be >= 1");
  }
};

struct DirectionReport {
  std::string direction;
  double acc_mean = 0.0;
  std::vector<double> acc_per_seed;
  std::map<std::size_t, double> topk;
};

struct RetrievalReport {
  std::size_t pool_size = 0;
  std::size_t n_seeds = 0;
  std::uint64_t base_seed = 0;
  DirectionReport image;  // voxel -> image ("image retrieval")
  DirectionReport brain;  // image -> voxel ("brain retrieval")
};

// Dense similarity matrix S[s][i] = cos(F_s, V_i), row-major N_F x N_V.
struct SimilarityMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;
  std::size_t degenerate = 0;  // pairs involving a zero-norm row

  double operator()(std::size_t s, std::size_t i) const { return values[s * cols + i]; }
};

template <typename T>
SimilarityMatrix similarity_matrix(const EmbeddingStore<T>& F, const EmbeddingStore<T>& V, std::size_t threads = 1) {
  if (F.width() != V.width()) {
    throw DataError("similarity: voxel width " + std::to_string(F.width()) + " vs image width " +
                    std::to_string(V.width()));
  }
  const std::size_t E = F.width();
  auto unit = [E](const EmbeddingStore<T>& st, std::vector<bool>& zero) {
    std::vector<double> out(st.size() * E);
    zero.assign(st.size(), false);
    for (std::size_t r = 0; r < st.size(); ++r) {
      double sq = 0.0;
      for (T v : st.row(r)) sq += static_cast<double>(v) * v;
      if (sq == 0.0) {
        zero[r] = true;
        continue;
      }
      const double inv = 1.0 / std::sqrt(sq);
      auto row = st.row(r);
      for (std::size_t c = 0; c < E; ++c) out[r * E + c] = row[c] * inv;
    }
    return out;
  };
  std::vector<bool> fz, vz;
  const auto f = unit(F, fz);
  const auto v = unit(V, vz);
  SimilarityMatrix S{F.size(), V.size(), std::vector<double>(F.size() * V.size()), 0};
  parallel_chunks(F.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t s = begin; s < end; ++s)
      for (std::size_t i = 0; i < V.size(); ++i) {
        double dot = 0.0;
        for (std::size_t c = 0; c < E; ++c) dot += f[s * E + c] * v[i * E + c];
        S.values[s * S.cols + i] = std::clamp(dot, -1.0, 1.0);
      }
  });
  for (std::size_t s = 0; s < F.size(); ++s)
    for (std::size_t i = 0; i < V.size(); ++i) S.degenerate += (fz[s] || vz[i]) ? 1 : 0;
  return S;
}

// The distractor indices for every query under one seed (N x (pool_size-1)).
inline std::vector<std::vector<std::size_t>> draw_pools(std::size_t n, std::size_t pool_size, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<std::size_t>> pools(n);
  std::vector<std::size_t> cand(n - 1);
  const std::size_t m = n - 1;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0, k = 0; i < n; ++i)
      if (i != s) cand[k++] = i;
    for (std::size_t i = 0; i + 1 < pool_size; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next() % (m - i));
      std::swap(cand[i], cand[j]);
    }
    pools[s].assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(pool_size - 1));
  }
  return pools;
}

template <typename T>
RetrievalReport eval_pool_retrieval(const EmbeddingStore<T>& F, const EmbeddingStore<T>& V,
                                    const RetrievalProtocol& proto) {
  if (F.ids != V.ids) throw DataError("eval_pool_retrieval: voxel and image stores are not aligned by id");
  const std::size_t N = F.size();
  proto.validate(N);
  const auto S = similarity_matrix(F, V, proto.threads);

  RetrievalReport rep;
  rep.pool_size = proto.pool_size;
  rep.n_seeds = proto.n_seeds;
  rep.base_seed = proto.base_seed;
  rep.image.direction = "voxel_to_image";
  rep.brain.direction = "image_to_voxel";
  std::map<std::size_t, double> img_k, brn_k;
  for (auto k : proto.top_k) img_k[k] = brn_k[k] = 0.0;

  for (std::size_t seed = 0; seed < proto.n_seeds; ++seed) {
    const auto pools = draw_pools(N, proto.pool_size, proto.base_seed + seed);
    std::size_t img_hits = 0, brn_hits = 0;
    std::map<std::size_t, std::size_t> img_topk, brn_topk;
    for (std::size_t s = 0; s < N; ++s) {
      const double img_true = S(s, s), brn_true = S(s, s);
      std::size_t img_ge = 0, brn_ge = 0;  // distractors scoring >= the partner
      for (auto j : pools[s]) {
        img_ge += S(s, j) >= img_true ? 1 : 0;
        brn_ge += S(j, s) >= brn_true ? 1 : 0;
      }
      img_hits += img_ge == 0 ? 1 : 0;
      brn_hits += brn_ge == 0 ? 1 : 0;
      for (auto k : proto.top_k) {
        img_topk[k] += img_ge < k ? 1 : 0;
        brn_topk[k] += brn_ge < k ? 1 : 0;
      }
    }
    rep.image.acc_per_seed.push_back(static_cast<double>(img_hits) / static_cast<double>(N));
    rep.brain.acc_per_seed.push_back(static_cast<double>(brn_hits) / static_cast<double>(N));
    for (auto k : proto.top_k) {
      img_k[k] += static_cast<double>(img_topk[k]) / static_cast<double>(N);
      brn_k[k] += static_cast<double>(brn_topk[k]) / static_cast<double>(N);
    }
  }
  const double seeds = static_cast<double>(proto.n_seeds);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  rep.image.acc_mean = mean(rep.image.acc_per_seed);
  rep.brain.acc_mean = mean(rep.brain.acc_per_seed);
  for (auto k : proto.top_k) {
    rep.image.topk[k] = img_k[k] / seeds;
    rep.brain.topk[k] = brn_k[k] / seeds;
  }
  return rep;
}

inline nlohmann::json to_json(const DirectionReport& d, const RetrievalReport& r) {
  nlohmann::json topk = nlohmann::json::object();
  for (const auto& [k, v] : d.topk) topk[std::to_string(k)] = v;
  return {{"direction", d.direction}, {"pool_size", r.pool_size}, {"n_seeds", r.n_seeds},
          {"acc_mean", d.acc_mean},   {"acc_per_seed", d.acc_per_seed}, {"topk", topk}};
}

inline nlohmann::json to_json(const RetrievalReport& r) {
  return {{"base_seed", r.base_seed}, {"reports", nlohmann::json::array({to_json(r.image, r), to_json(r.brain, r)})}};
}

struct RankReport {
  std::string direction;
  std::vector<std::size_t> ranks;  // 1-based rank of the partner for every query
  std::map<std::size_t, double> topk;
};

struct FullRankReport {
  RankReport image, brain;
  SimilarityMatrix similarity;
};

// Rank of the partner among all N items: 1 + number of other items scoring
// >= the partner (ties resolved against the query).
template <typename T>
FullRankReport full_rank_retrieval(const EmbeddingStore<T>& F, const EmbeddingStore<T>& V,
                                   const std::vector<std::size_t>& top_k = {1, 5}, std::size_t threads = 1) {
  if (F.ids != V.ids) throw DataError("full_rank_retrieval: voxel and image stores are not aligned by id");
  FullRankReport rep;
  rep.similarity = similarity_matrix(F, V, threads);
  const auto& S = rep.similarity;
  const std::size_t N = F.size();
  rep.image.direction = "voxel_to_image";
  rep.brain.direction = "image_to_voxel";
  for (std::size_t s = 0; s < N; ++s) {
    std::size_t img = 1, brn = 1;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == s) continue;
      img += S(s, j) >= S(s, s) ? 1 : 0;
      brn += S(j, s) >= S(s, s) ? 1 : 0;
    }
    rep.image.ranks.push_back(img);
    rep.brain.ranks.push_back(brn);
  }
  for (auto* r : {&rep.image, &rep.brain}) {
    for (auto k : top_k) {
      std::size_t hits = 0;
      for (auto rank : r->ranks) hits += rank <= k ? 1 : 0;
      r->topk[k] = N == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(N);
    }
  }
  return rep;
}

inline nlohmann::json to_json(const FullRankReport& r) {
  auto one = [](const RankReport& d) {
    nlohmann::json topk = nlohmann::json::object();
    for (const auto& [k, v] : d.topk) topk[std::to_string(k)] = v;
    return nlohmann::json{{"direction", d.direction}, {"topk", topk}, {"ranks", d.ranks}};
  };
  return {{"pool_size", r.similarity.cols}, {"reports", nlohmann::json::array({one(r.image), one(r.brain)})}};
}

// Header "id,<image ids...>", then one row per voxel query.
inline void write_similarity_csv(const std::string& path, const SimilarityMatrix& S,
                                 const std::vector<std::string>& row_ids, const std::vector<std::string>& col_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "id";
  for (const auto& id : col_ids) out << ',' << id;
  out << '\n' << std::setprecision(17);
  for (std::size_t s = 0; s < S.rows; ++s) {
    out << row_ids[s];
    for (std::size_t i = 0; i < S.cols; ++i) out << ',' << S(s, i);
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path);
}

// Index of the highest-scoring row (lowest index on ties).
template <typename T>
std::size_t argmax_cosine(std::span<const T> q, const EmbeddingStore<T>& store) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const double c = cosine_sim<T>(q, store.row(i));
    if (c > best_score) {
      best_score = c;
      best = i;
    }
  }
  return best;
}

// Class indices ordered by cosine similarity to q, descending (ties by index).
template <typename T>
std::vector<std::size_t> rank_classes(std::span<const T> q, const EmbeddingStore<T>& classes) {
  std::vector<double> score(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) score[c] = cosine_sim<T>(q, classes.row(c));
  std::vector<std::size_t> order(classes.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

struct ZeroShotResult {
  std::size_t retrieved = 0;                 // index into the image store
  std::vector<std::size_t> class_ranking;    // indices into the class store
};

// Retrieve the top-1 image for f, then rank classes against that image.
template <typename T>
ZeroShotResult zero_shot_classify(std::span<const T> f, const EmbeddingStore<T>& images,
                                  const EmbeddingStore<T>& classes) {
  if (classes.size() == 0) throw DataError("zero_shot_classify: empty class store");
  if (images.size() == 0) throw DataError("zero_shot_classify: empty image store");
  ZeroShotResult r;
  r.retrieved = argmax_cosine(f, images);
  r.class_ranking = rank_classes(images.row(r.retrieved), classes);
  return r;
}

struct ZeroShotReport {
  std::size_t n = 0;
  std::size_t classes = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  double chance_top1 = 0.0;
  double chance_top5 = 0.0;
};

inline double chance_top_k(std::size_t classes, std::size_t k) {
  return classes == 0 ? 0.0 : static_cast<double>(std::min(k, classes)) / static_cast<double>(classes);
}

// labels[s] is the true class index of query row s of F.
template <typename T>
ZeroShotReport zero_shot_evaluate(const EmbeddingStore<T>& F, const std::vector<std::size_t>& labels,
                                  const EmbeddingStore<T>& images, const EmbeddingStore<T>& classes) {
  if (labels.size() != F.size()) throw DataError("zero_shot: label count does not match query count");
  ZeroShotReport rep;
  rep.n = F.size();
  rep.classes = classes.size();
  std::size_t top1 = 0, top5 = 0;
  for (std::size_t s = 0; s < F.size(); ++s) {
    const auto r = zero_shot_classify(F.row(s), images, classes);
    const auto pos = std::find(r.class_ranking.begin(), r.class_ranking.end(), labels[s]) - r.class_ranking.begin();
    top1 += pos < 1 ? 1 : 0;
    top5 += pos < 5 ? 1 : 0;
  }
  if (rep.n > 0) {
    rep.top1 = static_cast<double>(top1) / static_cast<double>(rep.n);
    rep.top5 = static_cast<double>(top5) / static_cast<double>(rep.n);
  }
  rep.chance_top1 = chance_top_k(rep.classes, 1);
  rep.chance_top5 = chance_top_k(rep.classes, 5);
  return rep;
}

inline nlohmann::json to_json(const ZeroShotReport& r) {
  return {{"n", r.n},       {"classes", r.classes},         {"top1", r.top1},
          {"top5", r.top5}, {"chance_top1", r.chance_top1}, {"chance_top5", r.chance_top5}};
}

}  // namespace litemind
