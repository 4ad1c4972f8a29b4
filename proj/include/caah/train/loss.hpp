#pragma once

#include <span>

#include "caah/nn/ops.hpp"

namespace caah::train {

// y (1 - eps) + 0.5 eps
inline double smooth_label(int y, double eps) { return static_cast<double>(y) * (1.0 - eps) + 0.5 * eps; }

// (1 - w) BCE(full, target) + w BCE(text, target), each a batch mean with the
// positive term weighted by pos_weight.
template <typename T>
nn::Expr<T> joint_loss(nn::Expr<T> logit_full, nn::Expr<T> logit_text, std::span<const T> targets,
                       double loss_weight, double pos_weight) {
  const T pw = static_cast<T>(pos_weight);
  auto full = nn::bce_with_logits(logit_full, targets, pw);
  auto text = nn::bce_with_logits(logit_text, targets, pw);
  return nn::add(nn::scale(full, static_cast<T>(1.0 - loss_weight)), nn::scale(text, static_cast<T>(loss_weight)));
}

}  // namespace caah::train
