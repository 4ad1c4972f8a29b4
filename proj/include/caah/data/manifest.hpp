#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace caah::data {

enum class Split { train, val, test, test_unlabeled };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);
inline bool is_labelled(Split split) { return split != Split::test_unlabeled; }

// One manifest line. Paths are absolute (resolved against the manifest's
// directory); embeddings are loaded separately.
struct SampleDescriptor {
  std::string id;
  Split split = Split::train;
  std::optional<int> label;
  std::vector<std::filesystem::path> video;
  std::filesystem::path audio;
  std::filesystem::path text;
  std::size_t line = 0;
};

// Line-delimited JSON with fields id, split, label (0, 1 or null), video
// (array of paths), audio, text. Errors name the offending line.
std::vector<SampleDescriptor> read_manifest(const std::filesystem::path& path);

// Writes paths relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, std::span<const SampleDescriptor> samples);

}  // namespace caah::data
