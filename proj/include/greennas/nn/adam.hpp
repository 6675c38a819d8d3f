#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "greennas/nn/layers.hpp"

namespace greennas::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class S>
struct AdamState {
  long step = 0;
  std::vector<Mat<S>> m, v;
};

// One bias-corrected Adam update over `params` using their accumulated grads.
// Rejects non-finite gradients before touching any weight.
template <class S>
void adam_step(std::span<Param<S>* const> params, AdamState<S>& state, const AdamConfig& cfg) {
  for (const auto* p : params)
    if (!p->grad.allFinite()) throw NumericError("non-finite gradient in tensor '" + p->name + "'");
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto* p : params) {
      state.m.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
  const S step_size = static_cast<S>(cfg.learning_rate / bc1);
  const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
  const S eps = static_cast<S>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (state.m[i].rows() != p.value.rows() || state.m[i].cols() != p.value.cols())
      throw PreconditionError("adam state shape mismatch for '" + p.name + "'");
    state.m[i] = b1 * state.m[i] + (S(1) - b1) * p.grad;
    state.v[i] = b2 * state.v[i] + (S(1) - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= step_size * state.m[i].array() / (state.v[i].array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

}  // namespace greennas::nn
