#include "caah/nn/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace caah::nn {

template <typename T>
void adamw_step(std::span<Parameter<T>* const> params, OptimState<T>& state, double lr) {
  if (lr < 0.0) throw std::invalid_argument("adamw_step: negative learning rate");
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adamw_step: optimiser state tracks " +
                                std::to_string(state.first_moment.size()) + " parameters, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& shape = params[i]->value.shape();
    if (params[i]->grad.shape() != shape || state.first_moment[i].shape() != shape) {
      throw std::invalid_argument("adamw_step: shape mismatch for parameter " + std::to_string(i) +
                                  " " + shape_string(shape));
    }
  }

  const AdamWConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    const auto& grad = params[i]->grad;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      const double p = value[k];
      value[k] = static_cast<T>(p - lr * (m_hat / (std::sqrt(v_hat) + c.eps)) - lr * c.weight_decay * p);
    }
  }
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr, double min_lr) {
  if (total_steps < 1) throw std::invalid_argument("cosine_lr: total_steps must be >= 1");
  if (step >= total_steps) return min_lr;
  if (step == 0) return base_lr;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

template void adamw_step<float>(std::span<Parameter<float>* const>, OptimState<float>&, double);
template void adamw_step<double>(std::span<Parameter<double>* const>, OptimState<double>&, double);

}  // namespace caah::nn
