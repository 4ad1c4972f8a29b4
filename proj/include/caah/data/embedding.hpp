#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace caah::data {

// One modality's token matrix, row-major length x dim. Tokens at positions
// >= valid_count are padding.
struct EmbeddingSequence {
  std::uint32_t length = 0;
  std::uint32_t dim = 0;
  std::uint32_t valid_count = 0;
  std::vector<float> tokens;

  // Throws DataError on shape, count or finiteness violations.
  void validate() const;

  std::span<const float> token(std::size_t i) const {
    return std::span<const float>(tokens).subspan(i * dim, dim);
  }

  bool operator==(const EmbeddingSequence&) const = default;
};

inline constexpr char kEmbeddingMagic[4] = {'C', 'A', 'A', 'H'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;

// Layout, little-endian: "CAAH", u16 version, u16 reserved (0), u32 length,
// u32 dim, u32 valid_count, then length*dim float32 row-major.
std::vector<std::uint8_t> encode_embedding(const EmbeddingSequence& seq);
EmbeddingSequence decode_embedding(std::span<const std::uint8_t> bytes);

void write_embedding(const std::filesystem::path& path, const EmbeddingSequence& seq);
EmbeddingSequence read_embedding(const std::filesystem::path& path);

}  // namespace caah::data
