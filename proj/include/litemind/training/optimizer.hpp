#pragma once

// Adaptive-moment optimizer with decoupled weight decay:
//
//   m <- b1 m + (1 - b1) g
//   v <- b2 v + (1 - b2) g^2
//   p <- p - lr_t (m_hat / (sqrt(v_hat) + eps) + wd p)
//
// lr_t ramps linearly over the first warmup_steps steps when warmup is set.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "litemind/error.hpp"
#include "litemind/numerics/tensor.hpp"

namespace litemind {

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 7.0;
  std::uint64_t warmup_steps = 0;

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("optimizer.lr must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer.beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer.beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("optimizer.eps must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be >= 0");
  }
};

// Non-owning view of one named parameter tensor.
template <typename T>
struct ParamRef {
  std::string name;
  Shape shape;
  std::vector<T>* data;
};

// Flattens anything with a visit(name, shape, vector&) method.
template <typename T, typename Model>
std::vector<ParamRef<T>> param_refs(Model& m) {
  std::vector<ParamRef<T>> out;
  m.visit([&](const std::string& name, const Shape& shape, std::vector<T>& v) { out.push_back({name, shape, &v}); });
  return out;
}

template <typename T>
class AdamW {
 public:
  explicit AdamW(OptimizerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const OptimizerConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return step_; }

  double current_lr() const {
    if (cfg_.warmup_steps == 0 || step_ >= cfg_.warmup_steps) return cfg_.lr;
    return cfg_.lr * static_cast<double>(step_ + 1) / static_cast<double>(cfg_.warmup_steps);
  }

  template <typename Model>
  void step_model(Model& params, Model& grads) {
    auto p = param_refs<T>(params);
    auto g = param_refs<T>(grads);
    step(p, g);
  }

  void step(const std::vector<ParamRef<T>>& params, const std::vector<ParamRef<T>>& grads) {
    if (params.size() != grads.size()) throw DataError("optimizer: parameter/gradient count mismatch");
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k].assign(params[k].data->size(), 0.0);
        v_[k].assign(params[k].data->size(), 0.0);
      }
    }
    if (m_.size() != params.size()) throw DataError("optimizer: parameter set changed between steps");
    const double lr = current_lr();
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k].data;
      const auto& g = *grads[k].data;
      if (p.size() != g.size() || p.size() != m_[k].size()) {
        throw DataError("optimizer: shape mismatch for " + params[k].name);
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * gi;
        v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mhat = m_[k][i] / bc1;
        const double vhat = v_[k][i] / bc2;
        const double pi = static_cast<double>(p[i]);
        const double next = pi - lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * pi);
        if (!std::isfinite(next)) {
          throw NumericError("optimizer: non-finite update for " + params[k].name + "[" + std::to_string(i) + "]");
        }
        p[i] = static_cast<T>(next);
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace litemind
