#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "caah/model/params.hpp"
#include "caah/train/config.hpp"

namespace caah::train {

struct Checkpoint {
  model::ModelParams<float> params;
  TrainConfig config;
  double threshold = 0.5;
  double best_val_macro_f1 = 0.0;
  std::size_t epoch = 0;
  double pos_weight = 1.0;
};

inline constexpr char kCheckpointMagic[4] = {'C', 'A', 'H', 'C'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

// Layout, little-endian: "CAHC", u16 version, u32 JSON length, JSON block
// (model config, train config, threshold, best_val_macro_f1, epoch,
// pos_weight), then per parameter: u16 name length, name bytes, u8 rank,
// u32 dims..., float32 payload.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace caah::train
