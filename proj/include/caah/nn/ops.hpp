#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "caah/nn/graph.hpp"
#include "caah/nn/rng.hpp"

namespace caah::nn {

// Scalar helpers shared by the differentiable ops and by inference code.
template <typename T>
T sigmoid(T x);

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
template <typename T>
T gelu_value(T x);

// Stable weighted BCE on a logit:
//   pos_weight * y * softplus(-l) + (1 - y) * softplus(l)
template <typename T>
T bce_with_logits_value(T logit, T target, T pos_weight);

// x[..., in] * weight[in, out] + bias[out]
template <typename T>
Expr<T> linear(Expr<T> x, Expr<T> weight, Expr<T> bias);

template <typename T>
Expr<T> gelu(Expr<T> x);

// Inverted dropout. Marks the graph stochastic when p > 0.
template <typename T>
Expr<T> dropout(Expr<T> x, T p, Rng& rng);

// Normalises over the last axis, then applies gain and bias.
template <typename T>
Expr<T> layer_norm(Expr<T> x, Expr<T> gain, Expr<T> bias, T eps);

// Softmax over the last axis; positions with mask == 0 get exactly zero weight.
// The mask has one byte per element of logits. Throws DataError when a row has
// no valid position.
template <typename T>
Expr<T> masked_softmax(Expr<T> logits, std::span<const std::uint8_t> mask);

// seq[B, L, D] . query[D] -> scores[B, L]
template <typename T>
Expr<T> attention_scores(Expr<T> seq, Expr<T> query);

// sum_i weights[b, i] * seq[b, i, :] -> [B, D]
template <typename T>
Expr<T> weighted_sum(Expr<T> weights, Expr<T> seq);

template <typename T>
Expr<T> add(Expr<T> a, Expr<T> b);

template <typename T>
Expr<T> sub(Expr<T> a, Expr<T> b);

template <typename T>
Expr<T> mul(Expr<T> a, Expr<T> b);

template <typename T>
Expr<T> scale(Expr<T> x, T factor);

// Elementwise |x|; the subgradient at 0 is 0.
template <typename T>
Expr<T> abs(Expr<T> x);

// Concatenates along the last axis; leading axes must agree.
template <typename T>
Expr<T> concat(const std::vector<Expr<T>>& parts);

template <typename T>
Expr<T> sum(Expr<T> x);

// Mean of bce_with_logits_value over all logits; targets align with logits.
template <typename T>
Expr<T> bce_with_logits(Expr<T> logits, std::span<const T> targets, T pos_weight);

}  // namespace caah::nn
