#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "omni/tensor.hpp"

namespace omni {

// Adam with bias correction; one first/second moment buffer per parameter.
template <typename T>
struct AdamState {
  T lr = T(3e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  int64_t step = 0;
  std::vector<std::vector<T>> m, v;
};

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& st) {
  if (st.m.empty()) {
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      st.m[i].assign(static_cast<size_t>(params[i].numel()), T(0));
      st.v[i].assign(static_cast<size_t>(params[i].numel()), T(0));
    }
  }
  check(st.m.size() == params.size(), ErrorCode::ShapeMismatch,
        "adam_step: parameter count changed");
  ++st.step;
  const T bc1 = T(1) - std::pow(st.beta1, static_cast<T>(st.step));
  const T bc2 = T(1) - std::pow(st.beta2, static_cast<T>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    check(st.m[i].size() == static_cast<size_t>(p.numel()), ErrorCode::ShapeMismatch,
          "adam_step: parameter shape changed");
    check(p.requires_grad(), ErrorCode::ShapeMismatch,
          "adam_step: parameter has no gradient buffer");
    T* data = p.data();
    const T* g = p.grad();
    T* m = st.m[i].data();
    T* v = st.v[i].data();
    const size_t n = st.m[i].size();
    for (size_t k = 0; k < n; ++k) {
      m[k] = st.beta1 * m[k] + (T(1) - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (T(1) - st.beta2) * g[k] * g[k];
      const T mhat = m[k] / bc1;
      const T vhat = v[k] / bc2;
      data[k] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace omni
