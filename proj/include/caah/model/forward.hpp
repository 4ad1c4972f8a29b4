#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "caah/data/batch.hpp"
#include "caah/model/params.hpp"
#include "caah/nn/ops.hpp"

namespace caah::model {

enum class Mode { train, eval };

template <typename T>
struct ForwardResult {
  nn::Expr<T> logit_full;  // [B, 1]
  nn::Expr<T> logit_text;  // [B, 1]
  nn::Expr<T> video;       // pooled [B, D]
  nn::Expr<T> audio;
  nn::Expr<T> text;
  nn::Expr<T> fused;  // fusion input [B, fusion_dim]
};

// Softmax(seq . query) over valid positions, then the weighted token sum.
template <typename T>
nn::Expr<T> attention_pool(nn::Expr<T> seq, std::span<const std::uint8_t> mask, nn::Expr<T> query);

// |v - a|, |v - t|, |a - t|
template <typename T>
std::array<nn::Expr<T>, 3> conflict_features(nn::Expr<T> video, nn::Expr<T> audio, nn::Expr<T> text);

// Dropout runs only in train mode and then requires dropout_rng.
template <typename T>
ForwardResult<T> forward(nn::Graph<T>& graph, ModelParams<T>& params, const data::Batch& batch, Mode mode,
                         nn::Rng* dropout_rng = nullptr);

// alpha * sigmoid(logit_text) + (1 - alpha) * sigmoid(logit_full)
double blend(double logit_text, double logit_full, double alpha);

}  // namespace caah::model
