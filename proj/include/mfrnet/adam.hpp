#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/tensor.hpp"

namespace mfrnet {

// First/second moment buffers for one parameter tensor.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);

  explicit AdamState(std::int64_t size, T b1 = T(0.9), T b2 = T(0.999),
                     T eps = T(1e-8))
      : m(size, T(0)), v(size, T(0)), beta1(b1), beta2(b2), epsilon(eps) {}
};

// One bias-corrected Adam update over a flat parameter/gradient pair.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads,
               AdamState<T>& state, T lr) {
  check(params.size() == grads.size() &&
            params.size() == state.m.size() && params.size() == state.v.size(),
        "adam_step size mismatch: params " + std::to_string(params.size()) +
            ", grads " + std::to_string(grads.size()) + ", state " +
            std::to_string(state.m.size()));
  state.t += 1;
  const T b1 = state.beta1;
  const T b2 = state.beta2;
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(b1),
                                               static_cast<double>(state.t)));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(b2),
                                               static_cast<double>(state.t)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const T m_hat = state.m[i] / bc1;
    const T v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

// Convenience wrapper owning the state for a fixed parameter list. Parameters
// are updated in list order; the optimizer requires exclusive access to them.
template <typename T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<TensorPtr<T>> params, T beta1 = T(0.9),
                         T beta2 = T(0.999), T epsilon = T(1e-8))
      : params_(std::move(params)) {
    states_.reserve(params_.size());
    for (const auto& p : params_) {
      states_.emplace_back(p->numel(), beta1, beta2, epsilon);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  void step(T lr) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      adam_step<T>(params_[i]->values(), params_[i]->grad(), states_[i], lr);
    }
  }

  const std::vector<TensorPtr<T>>& params() const { return params_; }

 private:
  std::vector<TensorPtr<T>> params_;
  std::vector<AdamState<T>> states_;
};

}  // namespace mfrnet
