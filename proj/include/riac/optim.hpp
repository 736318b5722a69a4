#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "riac/tensor.hpp"

namespace riac::ad {

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  AdamState() = default;
  explicit AdamState(AdamOptions opt) : options(opt) {}
};

// One bias-corrected Adam update. Moment buffers are created on the first call.
inline void adam_step(const std::vector<Tensor>& params, const std::vector<std::span<const double>>& grads, AdamState& state) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " + std::to_string(grads.size()) + " gradients");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state was built for a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (grads[i].size() != params[i].size() || state.m[i].size() != params[i].size())
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));

  ++state.step;
  const auto& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      p[j] -= o.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + o.eps);
    }
  }
}

inline void adam_step(const std::vector<Tensor>& params, AdamState& state) {
  std::vector<std::span<const double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.emplace_back(p.grad());
  adam_step(params, grads, state);
}

}  // namespace riac::ad
