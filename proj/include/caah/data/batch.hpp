#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "caah/data/dataset.hpp"

namespace caah::data {

// Zero-padded [batch, length, dim] tokens plus a [batch, length] validity mask.
struct ModalityBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<float> tokens;
  std::vector<std::uint8_t> mask;
};

struct Batch {
  ModalityBatch video;
  ModalityBatch audio;
  ModalityBatch text;
  std::vector<std::optional<int>> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return text.dim; }
};

// Pads each modality to the longest sequence in the batch. window_choice
// selects one video window per sample.
Batch make_batch(std::span<const Sample* const> samples, std::span<const std::size_t> window_choice);

}  // namespace caah::data
