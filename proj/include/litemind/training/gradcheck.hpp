#pragma once

// Central finite-difference verification of analytic gradients.
//
// For every scalar p of every parameter tensor:
//   D(h)    = (L(p + h) - L(p - h)) / 2h,  h = step_scale * max(1, |p|)
//   numeric = (4 D(h/2) - D(h)) / 3        (one Richardson step, O(h^4))
//   rel_err = |analytic - numeric| / max(|analytic|, |numeric|, floor)
// Plain D(h) leaves an O(h^2) truncation term that reaches 1e-5 relative
// when an output embedding has small norm (the L2 normalization in the
// contrastive loss has curvature ~ 1/|f|^2); set richardson = false for the
// plain quotient.
// The floor keeps coordinates whose true gradient is ~0 from reporting
// roundoff as a large relative error: with h = 1e-4 the refined quotient
// carries ~1e-11 * |L| of cancellation noise, which is 1e-6 relative at
// |g| = 1e-5. Below the floor the check is absolute (|a - n| <= tolerance *
// floor, 1e-10 with the defaults).
//
// The leaky ramp has a kink at 0. When a perturbation flips the sign of any
// pre-activation the difference quotient straddles the kink and says nothing
// about the one-sided derivative, so the step is shrunk by 10x (up to
// max_shrink times) until the activation pattern is stable. Coordinates that
// never stabilize are reported as non-smooth and excluded from the verdict.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "litemind/backbone/backbone.hpp"
#include "litemind/backbone/backward.hpp"
#include "litemind/training/loss.hpp"
#include "litemind/training/optimizer.hpp"

namespace litemind {

struct GradCheckOptions {
  double tolerance = 1e-6;
  double step_scale = 1e-4;
  double floor = 1e-4;
  int max_shrink = 4;
  bool richardson = true;
};

struct ParamGradError {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t shrunk = 0;     // coordinates evaluated with a reduced step
  std::size_t nonsmooth = 0;  // coordinates excluded as kink crossings
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double tolerance = 0.0;
  std::size_t nonsmooth = 0;
  bool pass = true;

  std::string worst_coordinate() const { return worst_param + "[" + std::to_string(worst_index) + "]"; }
};

// loss() must evaluate the objective at the current contents of params;
// analytic must have the same visiting order and shapes as params. pattern()
// returns the activation sign pattern at the current parameters (any
// equality-comparable value; a constant disables kink handling).
template <typename T, typename Model, typename Loss, typename Pattern>
GradCheckReport grad_check(Model& params, Model& analytic, Loss&& loss, Pattern&& pattern,
                           const GradCheckOptions& opt) {
  auto p = param_refs<T>(params);
  auto g = param_refs<T>(analytic);
  if (p.size() != g.size()) throw DataError("grad_check: parameter/gradient count mismatch");
  const auto base_pattern = pattern();
  GradCheckReport report;
  report.tolerance = opt.tolerance;
  bool first = true;
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& v = *p[k].data;
    const auto& gv = *g[k].data;
    if (v.size() != gv.size()) throw DataError("grad_check: shape mismatch for " + p[k].name);
    ParamGradError e{p[k].name};
    bool any = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const T saved = v[i];
      T h = static_cast<T>(opt.step_scale * std::max(1.0, std::abs(static_cast<double>(saved))));
      auto quotient = [&](T step, bool& ok) {
        v[i] = saved + step;
        const double up = loss();
        ok = pattern() == base_pattern;
        v[i] = saved - step;
        const double down = loss();
        ok = ok && pattern() == base_pattern;
        v[i] = saved;
        return (up - down) / (2.0 * static_cast<double>(step));
      };
      double numeric = 0.0;
      bool smooth = false;
      for (int attempt = 0; attempt <= opt.max_shrink; ++attempt) {
        bool ok_full = false, ok_half = true;
        const double full = quotient(h, ok_full);
        numeric = full;
        if (ok_full && opt.richardson) numeric = (4.0 * quotient(h / T{2}, ok_half) - full) / 3.0;
        if (ok_full && ok_half) {
          smooth = true;
          e.shrunk += attempt > 0 ? 1 : 0;
          break;
        }
        h /= T{10};
      }
      if (!smooth) {
        ++e.nonsmooth;
        continue;
      }
      const double a = static_cast<double>(gv[i]);
      const double denom = std::max({std::abs(a), std::abs(numeric), opt.floor});
      const double err = std::abs(a - numeric) / denom;
      if (err > e.max_rel_err || !any) {
        any = true;
        e.max_rel_err = err;
        e.worst_index = i;
        e.analytic = a;
        e.numeric = numeric;
      }
    }
    report.nonsmooth += e.nonsmooth;
    if (any && (e.max_rel_err > report.max_rel_err || first)) {
      first = false;
      report.max_rel_err = e.max_rel_err;
      report.worst_param = e.name;
      report.worst_index = e.worst_index;
    }
    report.params.push_back(std::move(e));
  }
  report.pass = report.max_rel_err <= opt.tolerance;
  return report;
}

template <typename T, typename Model, typename Loss>
GradCheckReport grad_check(Model& params, Model& analytic, Loss&& loss, const GradCheckOptions& opt = {}) {
  return grad_check<T>(params, analytic, std::forward<Loss>(loss), [] { return 0; }, opt);
}

enum class Objective { contrastive, mse };

// A fixed batch and objective used to exercise the backbone gradients.
template <typename T>
struct CheckBatch {
  RealTensor<T> x;       // B x voxel_len
  RealTensor<T> target;  // B x output_size
  Objective objective = Objective::contrastive;
  LossConfig loss;
};

template <typename T>
double batch_loss(const DftBackbone<T>& m, const CheckBatch<T>& batch, RealTensor<T>* grad_f = nullptr) {
  const std::size_t B = batch.x.rows(), E = m.config.output_size();
  RealTensor<T> F({B, E});
  for (std::size_t s = 0; s < B; ++s) {
    auto f = forward<T>(batch.x.row(s), m);
    std::copy(f.data.begin(), f.data.end(), F.row(s).begin());
  }
  auto value = batch.objective == Objective::contrastive ? contrastive_loss(F, batch.target, batch.loss)
                                                         : mse_loss(F, batch.target);
  if (grad_f) *grad_f = std::move(value.grad);
  return value.value;
}

template <typename T>
DftBackbone<T> batch_gradient(const DftBackbone<T>& m, const CheckBatch<T>& batch, double* value = nullptr) {
  RealTensor<T> grad_f;
  const double v = batch_loss(m, batch, &grad_f);
  if (value) *value = v;
  auto grad = zeros_like(m);
  for (std::size_t s = 0; s < batch.x.rows(); ++s) backward<T>(batch.x.row(s), grad_f.row(s), m, grad);
  return grad;
}

// Signs of every frequency-projector pre-activation over the batch.
template <typename T>
std::vector<bool> activation_pattern(const DftBackbone<T>& m, const CheckBatch<T>& batch) {
  std::vector<bool> signs;
  ForwardCache<T> cache;
  for (std::size_t s = 0; s < batch.x.rows(); ++s) {
    forward<T>(batch.x.row(s), m, &cache);
    for (T z : cache.fremlp.pre.re) signs.push_back(z >= T{0});
    for (T z : cache.fremlp.pre.im) signs.push_back(z >= T{0});
  }
  return signs;
}

template <typename T>
GradCheckReport check_backbone(DftBackbone<T>& m, const CheckBatch<T>& batch, const GradCheckOptions& opt = {}) {
  auto grad = batch_gradient(m, batch);
  return grad_check<T>(
      m, grad, [&] { return batch_loss(m, batch); }, [&] { return activation_pattern(m, batch); }, opt);
}

}  // namespace litemind
