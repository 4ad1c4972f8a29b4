#include "caah/train/checkpoint.hpp"

#include <algorithm>

#include "caah/data/bytes.hpp"
#include "caah/errors.hpp"

namespace caah::train {

using nlohmann::json;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const json header{{"model", to_json(ckpt.params.config)},
                    {"train", to_json(ckpt.config)},
                    {"threshold", ckpt.threshold},
                    {"best_val_macro_f1", ckpt.best_val_macro_f1},
                    {"epoch", ckpt.epoch},
                    {"pos_weight", ckpt.pos_weight}};
  const std::string text = header.dump();
  data::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  for (const auto& [name, p] : ckpt.params.named()) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    const auto& shape = p->value.shape();
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p->value.values()) w.f32(v);
  }
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  data::ByteReader r(bytes);
  if (!r.has(10)) throw DataError("checkpoint truncated: missing header");
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic)) {
    throw DataError("bad checkpoint magic, expected \"CAHC\"");
  }
  const auto version = r.u16();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto json_len = r.u32();
  if (!r.has(json_len)) throw DataError("checkpoint truncated in config block");
  const auto raw = r.raw(json_len);
  json header;
  try {
    header = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint config block is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.params = model::allocate_model<float>(model_config_from_json(header.at("model")));
    ckpt.config = train_config_from_json(header.at("train"));
    ckpt.threshold = header.at("threshold").get<double>();
    ckpt.best_val_macro_f1 = header.at("best_val_macro_f1").get<double>();
    ckpt.epoch = header.at("epoch").get<std::size_t>();
    ckpt.pos_weight = header.at("pos_weight").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint config block: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config block: ") + e.what());
  }

  for (auto& [name, p] : ckpt.params.named()) {
    auto truncated = [&] { return DataError("checkpoint truncated in parameter " + name); };
    if (!r.has(2)) throw truncated();
    const auto name_len = r.u16();
    if (!r.has(name_len + 1u)) throw truncated();
    const auto stored = r.raw(name_len);
    const std::string stored_name(stored.begin(), stored.end());
    if (stored_name != name) throw DataError("checkpoint parameter \"" + stored_name + "\" where \"" + name + "\" expected");
    const auto rank = r.u8();
    if (!r.has(4u * rank)) throw truncated();
    nn::Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != p->value.shape()) {
      throw DataError("checkpoint parameter " + name + " has shape " + nn::shape_string(shape) + ", expected " +
                      nn::shape_string(p->value.shape()));
    }
    if (!r.has(4 * p->value.size())) throw truncated();
    for (auto& v : p->value.values()) v = r.f32();
  }
  if (r.remaining() != 0) throw DataError("checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  data::write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(data::read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace caah::train
