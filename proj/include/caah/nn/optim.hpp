#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "caah/nn/tensor.hpp"

namespace caah::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// Moments are sized lazily on the first step and start at zero.
template <typename T>
struct OptimState {
  AdamWConfig config;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::uint64_t step = 0;
};

// Bias-corrected Adam with decoupled weight decay, reading each parameter's
// accumulated grad:
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * p
template <typename T>
void adamw_step(std::span<Parameter<T>* const> params, OptimState<T>& state, double lr);

// Cosine annealing from base_lr at step 0 to min_lr at total_steps; steps past
// the end stay at min_lr.
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr, double min_lr);

extern template void adamw_step<float>(std::span<Parameter<float>* const>, OptimState<float>&, double);
extern template void adamw_step<double>(std::span<Parameter<double>* const>, OptimState<double>&,
                                        double);

}  // namespace caah::nn
