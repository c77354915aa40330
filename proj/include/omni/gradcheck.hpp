#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "omni/tensor.hpp"

namespace omni {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<double> per_input;  // max relative error per checked input

  bool passed(double tol = 1e-4) const { return max_rel_error < tol; }
};

// Central-difference validation of a scalar-valued tensor function. Inputs
// are marked as requiring gradients, the analytic gradient is taken from one
// forward/backward pass, and every element is probed at +/- step. Relative
// error uses max(1, |fd|, |analytic|) as the denominator. Run in 64-bit mode.
inline GradCheckResult grad_check(
    const std::function<Tensor<double>(std::vector<Tensor<double>>&)>& fn,
    std::vector<Tensor<double>> inputs, double step = 1e-5) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  Tensor<double> out = fn(inputs);
  check(out.numel() == 1, ErrorCode::ShapeMismatch, "grad_check: scalar output required");
  out.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& in : inputs)
    analytic.emplace_back(in.grad(), in.grad() + in.numel());

  GradCheckResult res;
  res.per_input.assign(inputs.size(), 0.0);
  for (size_t k = 0; k < inputs.size(); ++k) {
    auto& in = inputs[k];
    for (int64_t i = 0; i < in.numel(); ++i) {
      const double saved = in.data()[i];
      in.data()[i] = saved + step;
      const double fp = fn(inputs).item();
      in.data()[i] = saved - step;
      const double fm = fn(inputs).item();
      in.data()[i] = saved;
      const double fd = (fp - fm) / (2.0 * step);
      const double an = analytic[k][static_cast<size_t>(i)];
      const double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      const double rel = std::abs(fd - an) / denom;
      res.per_input[k] = std::max(res.per_input[k], rel);
    }
    res.max_rel_error = std::max(res.max_rel_error, res.per_input[k]);
  }
  return res;
}

}  // namespace omni
