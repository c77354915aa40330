#pragma once

#include <cmath>

#include "omni/tensor.hpp"

namespace omni {

// Mean absolute difference; subgradient at 0 taken as 0.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::require_same_shape(pred, target, "l1_loss");
  const size_t n = pred.vec().size();
  T acc = T(0);
  for (size_t i = 0; i < n; ++i) acc += std::abs(pred.data()[i] - target.data()[i]);
  acc /= static_cast<T>(n);
  return detail::make_op<T>(
      {1}, {acc}, {pred, target}, [n](typename Tensor<T>::Node& node) {
        const T g = node.grad[0] / static_cast<T>(n);
        auto& pp = *node.parents[0];
        auto& pt = *node.parents[1];
        for (size_t i = 0; i < n; ++i) {
          const T d = pp.data[i] - pt.data[i];
          const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
          if (pp.requires_grad) pp.grad[i] += g * s;
          if (pt.requires_grad) pt.grad[i] -= g * s;
        }
      });
}

// Mean of max(x,0) - x*t + log(1 + exp(-|x|)); the stable form of binary
// cross-entropy on logits. Targets must lie in [0, 1].
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target) {
  detail::require_same_shape(logits, target, "bce_with_logits");
  const size_t n = logits.vec().size();
  for (size_t i = 0; i < n; ++i)
    check(target.data()[i] >= T(0) && target.data()[i] <= T(1),
          ErrorCode::TargetOutOfRange, "bce target outside [0, 1]");
  T acc = T(0);
  for (size_t i = 0; i < n; ++i) {
    const T x = logits.data()[i];
    const T t = target.data()[i];
    acc += std::max(x, T(0)) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  acc /= static_cast<T>(n);
  return detail::make_op<T>(
      {1}, {acc}, {logits, target}, [n](typename Tensor<T>::Node& node) {
        const T g = node.grad[0] / static_cast<T>(n);
        auto& px = *node.parents[0];
        auto& pt = *node.parents[1];
        for (size_t i = 0; i < n; ++i) {
          const T x = px.data[i];
          const T sig = T(1) / (T(1) + std::exp(-x));
          if (px.requires_grad) px.grad[i] += g * (sig - pt.data[i]);
          if (pt.requires_grad) pt.grad[i] += g * (-x);
        }
      });
}

}  // namespace omni
