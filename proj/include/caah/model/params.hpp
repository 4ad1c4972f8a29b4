#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "caah/model/config.hpp"
#include "caah/nn/tensor.hpp"

namespace caah::model {

template <typename T>
struct LinearParams {
  nn::Parameter<T> weight;  // [in, out]
  nn::Parameter<T> bias;    // [out]
};

template <typename T>
struct LayerNormParams {
  nn::Parameter<T> gain;
  nn::Parameter<T> bias;
};

// LayerNorm -> Linear(in, hidden) -> GELU -> Dropout -> Linear(hidden, out)
template <typename T>
struct MlpParams {
  LayerNormParams<T> norm;
  LinearParams<T> first;
  LinearParams<T> second;
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  LinearParams<T> proj_video, proj_audio, proj_text;
  nn::Parameter<T> query_video, query_audio, query_text;
  MlpParams<T> fusion;     // fusion_dim -> 2 * fusion_dim -> fusion_dim
  MlpParams<T> head_full;  // fusion_dim -> head_hidden -> 1
  MlpParams<T> text_ffn;   // D -> 2D -> D, only when config.text_head_ffn
  MlpParams<T> head_text;  // D -> head_hidden -> 1

  // Every trainable tensor in canonical order (checkpoint order).
  std::vector<std::pair<std::string, nn::Parameter<T>*>> named();
  std::vector<std::pair<std::string, const nn::Parameter<T>*>> named() const;

  std::size_t parameter_count() const;

  template <typename U>
  ModelParams<U> cast() const;
};

// Closed-form count for a configuration; matches ModelParams::parameter_count.
std::size_t parameter_count(const ModelConfig& config);

// Linear weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)), biases 0, LayerNorm
// gain 1 and bias 0, attention queries 0 (pooling starts as a masked mean).
ModelParams<float> init_model(const ModelConfig& config, std::uint64_t seed);

// Zero-valued parameters with the right shapes, e.g. as a checkpoint target.
template <typename T>
ModelParams<T> allocate_model(const ModelConfig& config);

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

}  // namespace caah::model
