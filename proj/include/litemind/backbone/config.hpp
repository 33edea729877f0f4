#pragma once

#include <cstddef>
#include <string>

#include "litemind/error.hpp"

namespace litemind {

enum class Variant { hidden, cls };

inline std::string to_string(Variant v) { return v == Variant::hidden ? "hidden" : "cls"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "hidden") return Variant::hidden;
  if (s == "cls") return Variant::cls;
  throw ConfigError("unknown backbone variant '" + s + "' (expected hidden|cls)");
}

struct BackboneConfig {
  std::size_t voxel_len = 15724;
  std::size_t patch_size = 480;
  std::size_t embed_dim = 768;     // d; must equal out_dim
  std::size_t depth = 21;          // L filter blocks
  std::size_t filter_count = 4;    // M filters per library
  std::size_t out_tokens = 257;    // n'
  std::size_t out_dim = 768;       // D'
  Variant variant = Variant::hidden;
  double activation_slope = 0.01;  // leaky ramp in the frequency projector
  std::size_t mlp_hidden = 0;      // per-block channel MLP width, 0 = none
  bool residual = true;
  bool layer_norm = true;
  double norm_eps = 1e-5;

  std::size_t n_tokens() const { return (voxel_len + patch_size - 1) / patch_size; }
  std::size_t output_size() const { return out_tokens * out_dim; }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw ConfigError(std::string("backbone.") + name + " must be >= 1");
    };
    positive(voxel_len, "voxel_len");
    positive(patch_size, "patch_size");
    positive(embed_dim, "embed_dim");
    positive(filter_count, "filter_count");
    positive(out_tokens, "out_tokens");
    positive(out_dim, "out_dim");
    if (embed_dim != out_dim) {
      throw ConfigError("backbone.embed_dim (" + std::to_string(embed_dim) + ") must equal out_dim (" +
                        std::to_string(out_dim) + ")");
    }
    if (variant == Variant::cls && out_tokens != 1) {
      throw ConfigError("backbone.variant=cls requires out_tokens = 1");
    }
    if (!(activation_slope >= 0.0)) throw ConfigError("backbone.activation_slope must be >= 0");
    if (!(norm_eps > 0.0)) throw ConfigError("backbone.norm_eps must be > 0");
  }
};

}  // namespace litemind
