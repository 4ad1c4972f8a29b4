#pragma once

#include <cstdint>
#include <vector>

#include "caah/data/dataset.hpp"
#include "caah/model/config.hpp"
#include "caah/nn/grad_check.hpp"

namespace caah::train {

// A small full model on a random padded batch, checked in double precision
// with dropout off.
struct ModelGradCheckSetup {
  std::size_t dim = 8;
  std::size_t head_hidden = 512;
  std::size_t max_length = 4;
  std::size_t batch = 2;
  std::uint64_t seed = 0;
  bool conflict_features = true;
  bool text_head_ffn = false;
  model::Modalities modalities;
  double label_smoothing = 0.1;
  double loss_weight = 0.5;
  double pos_weight = 0.96;
};

// Random samples with lengths in [1, max_length] and alternating labels.
std::vector<data::Sample> random_samples(std::size_t count, std::size_t dim, std::size_t max_length,
                                         std::size_t windows, std::uint64_t seed);

nn::GradCheckReport check_model_gradients(const ModelGradCheckSetup& setup, const nn::GradCheckOptions& options = {});

}  // namespace caah::train
