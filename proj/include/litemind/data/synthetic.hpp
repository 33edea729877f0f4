#pragma once

// Synthetic paired data with a known generative map:
//
//   V_s = unit-normalized latent embedding (embed_tokens x embed_dim, flattened)
//   x_s = A flatten(V_s) + eps,   A_ij ~ N(0, 1),   eps ~ N(0, noise_sigma^2)
//
// With unit-norm V_s every voxel of A V_s has unit variance, so noise_sigma
// is the noise level relative to the per-voxel signal. Latents, A and class
// centroids come from the map_seed stream; trial noise from noise_seed.
//
// With class_count > 0, item s belongs to class s % class_count and
// V_s = normalize(c_k + class_spread * g_s) for a unit centroid c_k. The text
// store then holds the centroids, one row per class.
//
// The cls store holds token 0 of each latent (the CLS slot in CLIP's hidden
// layout).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "litemind/data/dataset.hpp"
#include "litemind/random.hpp"

namespace litemind {

struct SyntheticSpec {
  std::size_t n_train = 500;
  std::size_t n_test = 100;
  std::size_t test_trials = 1;  // independent noisy repeats per test stimulus
  std::size_t voxel_len = 2000;
  std::size_t embed_tokens = 16;
  std::size_t embed_dim = 64;
  double noise_sigma = 0.1;
  std::uint64_t map_seed = 1;
  std::uint64_t noise_seed = 2;
  std::size_t class_count = 0;
  double class_spread = 0.5;

  std::size_t embed_size() const { return embed_tokens * embed_dim; }

  void validate() const {
    if (n_train + n_test == 0) throw ConfigError("synth: n_train + n_test must be >= 1");
    if (voxel_len == 0 || embed_tokens == 0 || embed_dim == 0) throw ConfigError("synth: extents must be >= 1");
    if (test_trials == 0) throw ConfigError("synth.test_trials must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synth.noise_sigma must be >= 0");
    if (!(class_spread >= 0.0)) throw ConfigError("synth.class_spread must be >= 0");
  }
};

template <typename T>
struct SyntheticSplit {
  std::vector<std::string> ids;
  RealTensor<T> voxels;  // trials x voxel_len (test repeats are consecutive rows)
  std::vector<std::string> trial_ids;
  RealTensor<T> hidden;  // items x embed_tokens x embed_dim
  RealTensor<T> cls;     // items x embed_dim
  std::vector<std::size_t> labels;
};

template <typename T>
struct SyntheticData {
  RealTensor<double> map;  // voxel_len x embed_size
  SyntheticSplit<T> train, test;
  RealTensor<T> text;      // class_count x embed_size
  std::vector<std::string> class_ids;
};

namespace detail {

inline void normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  for (double& x : v) x *= inv;
}

inline std::string item_id(const char* prefix, std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(prefix) + std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

}  // namespace detail

template <typename T>
SyntheticData<T> make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t E = spec.embed_size(), L = spec.voxel_len, N = spec.n_train + spec.n_test;
  SplitMix64 map_rng(spec.map_seed);
  SplitMix64 noise_rng(spec.noise_seed);

  SyntheticData<T> out;
  out.map = RealTensor<double>({L, E});
  for (auto& a : out.map.data) a = map_rng.normal();

  std::vector<std::vector<double>> centroids(spec.class_count, std::vector<double>(E));
  for (auto& c : centroids) {
    for (auto& v : c) v = map_rng.normal();
    detail::normalize(c);
  }
  std::vector<std::vector<double>> latents(N, std::vector<double>(E));
  for (std::size_t s = 0; s < N; ++s) {
    auto& v = latents[s];
    for (auto& x : v) x = map_rng.normal();
    if (spec.class_count > 0) {
      detail::normalize(v);
      const auto& c = centroids[s % spec.class_count];
      for (std::size_t i = 0; i < E; ++i) v[i] = c[i] + spec.class_spread * v[i];
    }
    detail::normalize(v);
  }

  auto fill_split = [&](SyntheticSplit<T>& split, std::size_t first, std::size_t count, std::size_t trials,
                        const char* prefix) {
    split.hidden = RealTensor<T>({count, spec.embed_tokens, spec.embed_dim});
    split.cls = RealTensor<T>({count, spec.embed_dim});
    split.voxels = RealTensor<T>({count * trials, L});
    std::vector<double> clean(L);
    for (std::size_t k = 0; k < count; ++k) {
      const auto& v = latents[first + k];
      split.ids.push_back(detail::item_id(prefix, k));
      if (spec.class_count > 0) split.labels.push_back((first + k) % spec.class_count);
      for (std::size_t i = 0; i < E; ++i) split.hidden.data[k * E + i] = static_cast<T>(v[i]);
      for (std::size_t i = 0; i < spec.embed_dim; ++i) split.cls.data[k * spec.embed_dim + i] = static_cast<T>(v[i]);
      for (std::size_t r = 0; r < L; ++r) {
        double acc = 0.0;
        const double* a = out.map.data.data() + r * E;
        for (std::size_t i = 0; i < E; ++i) acc += a[i] * v[i];
        clean[r] = acc;
      }
      for (std::size_t t = 0; t < trials; ++t) {
        split.trial_ids.push_back(split.ids.back());
        auto row = split.voxels.row(k * trials + t);
        for (std::size_t r = 0; r < L; ++r) row[r] = static_cast<T>(clean[r] + spec.noise_sigma * noise_rng.normal());
      }
    }
  };
  fill_split(out.train, 0, spec.n_train, 1, "train");
  fill_split(out.test, spec.n_train, spec.n_test, spec.test_trials, "test");

  out.text = RealTensor<T>({spec.class_count, E});
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    out.class_ids.push_back(detail::item_id("class", c));
    for (std::size_t i = 0; i < E; ++i) out.text.data[c * E + i] = static_cast<T>(centroids[c][i]);
  }
  return out;
}

struct SyntheticPaths {
  std::string train_manifest;
  std::string test_manifest;
};

// Writes <dir>/{train,test}_manifest.json and their f32 tensors / id lists.
// Output bytes depend only on the SyntheticSpec fields.
inline SyntheticPaths generate_synthetic(const SyntheticSpec& spec, const std::string& dir,
                                         const std::string& subject = "synthetic") {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
  const auto data = make_synthetic<float>(spec);

  auto write_split = [&](const SyntheticSplit<float>& split, const std::string& name) {
    const std::string p = (fs::path(dir) / name).string();
    write_tensor(p + "_voxels.lmnd", split.voxels);
    write_tensor(p + "_hidden.lmnd", split.hidden);
    write_tensor(p + "_cls.lmnd", split.cls);
    write_id_list(p + "_ids.txt", split.ids);
    DatasetManifest m;
    m.subject = subject;
    m.split = name;
    m.voxel_len = spec.voxel_len;
    for (std::size_t k = 0; k < split.trial_ids.size(); ++k) {
      m.records.push_back({split.trial_ids[k], name + "_voxels.lmnd", k});
    }
    m.embeddings["hidden"] = {name + "_ids.txt", name + "_hidden.lmnd"};
    m.embeddings["cls"] = {name + "_ids.txt", name + "_cls.lmnd"};
    if (spec.class_count > 0) {
      m.embeddings["text"] = {"class_ids.txt", "class_text.lmnd"};
      for (std::size_t k = 0; k < split.ids.size(); ++k) m.labels[split.ids[k]] = split.labels[k];
    }
    const std::string manifest = p + "_manifest.json";
    write_manifest(manifest, m);
    return manifest;
  };
  if (spec.class_count > 0) {
    write_tensor((fs::path(dir) / "class_text.lmnd").string(), data.text);
    write_id_list((fs::path(dir) / "class_ids.txt").string(), data.class_ids);
  }
  return {write_split(data.train, "train"), write_split(data.test, "test")};
}

}  // namespace litemind
