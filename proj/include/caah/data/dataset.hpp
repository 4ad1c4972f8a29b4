#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "caah/data/embedding.hpp"
#include "caah/data/manifest.hpp"

namespace caah::data {

struct Sample {
  std::string id;
  Split split = Split::train;
  std::optional<int> label;
  std::vector<EmbeddingSequence> video_windows;
  EmbeddingSequence audio;
  EmbeddingSequence text;

  std::size_t dim() const { return text.dim; }

  // Throws DataError: no windows, mixed dims, label/split mismatch.
  void validate() const;
};

Sample load_sample(const SampleDescriptor& descriptor);

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Sample> samples);

  static Dataset load(const std::filesystem::path& manifest);

  const std::vector<Sample>& samples() const { return samples_; }
  std::vector<const Sample*> split(Split which) const;
  std::size_t dim() const { return samples_.empty() ? 0 : samples_.front().dim(); }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<Sample> samples_;
};

}  // namespace caah::data
