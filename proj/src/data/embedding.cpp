#include "caah/data/embedding.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "caah/data/bytes.hpp"
#include "caah/errors.hpp"

namespace caah::data {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void EmbeddingSequence::validate() const {
  if (length < 1) throw DataError("embedding sequence has zero length");
  if (dim < 1) throw DataError("embedding sequence has zero dim");
  if (valid_count < 1 || valid_count > length) {
    throw DataError("embedding valid_count " + std::to_string(valid_count) + " outside [1, " +
                    std::to_string(length) + "]");
  }
  if (tokens.size() != static_cast<std::size_t>(length) * dim) {
    throw DataError("embedding payload has " + std::to_string(tokens.size()) + " values, expected " +
                    std::to_string(static_cast<std::size_t>(length) * dim));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!std::isfinite(tokens[i])) {
      throw DataError("non-finite embedding value at token " + std::to_string(i / dim) + ", dim " +
                      std::to_string(i % dim));
    }
  }
}

std::vector<std::uint8_t> encode_embedding(const EmbeddingSequence& seq) {
  seq.validate();
  ByteWriter w;
  w.raw(std::string_view(kEmbeddingMagic, 4));
  w.u16(kEmbeddingVersion);
  w.u16(0);
  w.u32(seq.length);
  w.u32(seq.dim);
  w.u32(seq.valid_count);
  for (float v : seq.tokens) w.f32(v);
  return std::move(w.bytes());
}

EmbeddingSequence decode_embedding(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.has(kEmbeddingHeaderBytes)) {
    throw DataError("embedding file truncated: " + std::to_string(bytes.size()) + " bytes, header needs " +
                    std::to_string(kEmbeddingHeaderBytes));
  }
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kEmbeddingMagic)) {
    throw DataError("bad embedding magic, expected \"CAAH\"");
  }
  const auto version = r.u16();
  if (version != kEmbeddingVersion) {
    throw DataError("unsupported embedding format version " + std::to_string(version));
  }
  r.u16();  // reserved
  EmbeddingSequence seq;
  seq.length = r.u32();
  seq.dim = r.u32();
  seq.valid_count = r.u32();
  const std::size_t n = static_cast<std::size_t>(seq.length) * seq.dim;
  if (r.remaining() != n * 4) {
    throw DataError("embedding payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                    std::to_string(n * 4));
  }
  seq.tokens.resize(n);
  for (auto& v : seq.tokens) v = r.f32();
  seq.validate();
  return seq;
}

void write_embedding(const std::filesystem::path& path, const EmbeddingSequence& seq) {
  write_file_bytes(path, encode_embedding(seq));
}

EmbeddingSequence read_embedding(const std::filesystem::path& path) {
  try {
    return decode_embedding(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace caah::data
