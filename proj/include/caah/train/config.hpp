#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>

#include "caah/model/config.hpp"

namespace caah::train {

// Which validation probabilities the per-epoch threshold sweep uses.
enum class SweepSource { blend, full };

struct TrainConfig {
  double lr = 3e-5;
  double min_lr = 3e-7;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 4;
  std::size_t accum_steps = 4;
  std::size_t max_epochs = 60;
  std::size_t patience = 15;
  double label_smoothing = 0.0;
  double loss_weight = 0.5;
  // Unset: N_neg / N_pos of the training split.
  std::optional<double> pos_weight;
  double dropout = 0.3;
  std::uint64_t seed = 0;
  bool conflict_features = true;
  model::Modalities modalities;
  // 0 keeps the input width.
  std::size_t model_dim = 0;
  std::size_t head_hidden = 512;
  bool text_head_ffn = false;
  // Blend weight for validation during training.
  double alpha = 0.6;
  SweepSource sweep = SweepSource::blend;

  void validate() const;
  model::ModelConfig model_config(std::size_t input_dim) const;
};

nlohmann::json to_json(const TrainConfig& cfg);
// Strict: unknown keys raise ConfigError. Missing keys keep defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const model::ModelConfig& cfg);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace caah::train
