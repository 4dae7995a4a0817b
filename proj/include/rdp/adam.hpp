#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/tensor.hpp"

namespace rdp {

struct AdamHyper {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  bool initialized() const noexcept { return !m.empty(); }
};

/// One plain Adam update (bias-corrected, no weight decay). Gradients are
/// checked for NaN/Inf before any parameter is touched.
inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                      std::span<const std::string> names, AdamState& state, const AdamHyper& hyper) {
  if (params.size() != grads.size()) throw DimensionError("parameter and gradient counts differ");
  if (!state.initialized()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("optimizer state does not match parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string label = i < names.size() ? names[i] : "#" + std::to_string(i);
    if (grads[i].shape() != params[i]->shape() || state.m[i].shape() != params[i]->shape()) {
      throw DimensionError("shape mismatch for parameter " + label + ": " + shape_string(params[i]->shape()) +
                           " vs gradient " + shape_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) throw NumericError("non-finite gradient in parameter " + label);
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g[j];
      v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

}  // namespace rdp
