#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "caah/data/dataset.hpp"

namespace caah::data {

// Conflict task: video and text share a mean direction r*c*u for negatives
// and point in opposite directions for positives, with a per-sample random
// sign r. Each modality's marginal is therefore identical across classes and
// only video/text agreement carries the label. Audio is noise unless
// audio_signal > 0, in which case it gets audio_signal times the video mean.
struct SynthConfig {
  std::size_t n_per_class = 200;
  std::size_t dim = 64;
  std::size_t video_len = 32;
  std::size_t audio_len = 32;
  std::size_t text_len = 32;
  std::size_t windows = 5;
  double signal = 1.0;
  double noise = 0.5;
  double audio_signal = 0.0;
  // Audio lengths drawn uniformly from [ceil(audio_len / 2), audio_len].
  bool vary_audio_length = true;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  // Extra samples in the test_unlabeled split (labels withheld).
  std::size_t n_unlabeled = 0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthDataset {
  std::vector<Sample> samples;
  std::vector<float> direction;  // the unit vector u
  // Hidden class of every sample, including test_unlabeled ones.
  std::vector<int> true_labels;
};

// Per-class split sizes: round(train_fraction * n), round(val_fraction * n),
// remainder to test.
struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};
SplitCounts split_counts(const SynthConfig& cfg);

SynthDataset synth_generate(const SynthConfig& cfg);

// Writes emb/<id>_v<k>.caah, emb/<id>_a.caah, emb/<id>_t.caah and
// manifest.jsonl under dir. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, std::span<const Sample> samples);

}  // namespace caah::data
