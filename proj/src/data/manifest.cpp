#include "caah/data/manifest.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "caah/errors.hpp"

namespace caah::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::test_unlabeled: return "test_unlabeled";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  if (text == "test_unlabeled") return Split::test_unlabeled;
  return std::nullopt;
}

namespace {

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

const json& field(const json& obj, const char* name, const fs::path& path, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) fail(path, line, std::string("missing field \"") + name + "\"");
  return *it;
}

fs::path path_field(const json& v, const char* name, const fs::path& base, const fs::path& path,
                    std::size_t line) {
  if (!v.is_string() || v.get<std::string>().empty()) {
    fail(path, line, std::string("field \"") + name + "\" must be a non-empty path string");
  }
  fs::path p(v.get<std::string>());
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace

std::vector<SampleDescriptor> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  std::vector<SampleDescriptor> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(path, line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail(path, line, "expected a JSON object");

    SampleDescriptor d;
    d.line = line;
    const auto& id = field(obj, "id", path, line);
    if (!id.is_string() || id.get<std::string>().empty()) fail(path, line, "\"id\" must be a non-empty string");
    d.id = id.get<std::string>();

    const auto& split = field(obj, "split", path, line);
    if (!split.is_string()) fail(path, line, "\"split\" must be a string");
    const auto parsed = parse_split(split.get<std::string>());
    if (!parsed) {
      fail(path, line, "unknown split \"" + split.get<std::string>() +
                           "\" (expected train, val, test or test_unlabeled)");
    }
    d.split = *parsed;

    const auto& label = field(obj, "label", path, line);
    if (label.is_null()) {
      if (is_labelled(d.split)) fail(path, line, "label is null in labelled split " + split.get<std::string>());
    } else {
      if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
        fail(path, line, "\"label\" must be 0, 1 or null");
      }
      if (!is_labelled(d.split)) fail(path, line, "test_unlabeled sample carries a label");
      d.label = label.get<int>();
    }

    const auto& video = field(obj, "video", path, line);
    if (!video.is_array()) fail(path, line, "\"video\" must be an array of paths");
    if (video.empty()) fail(path, line, "\"video\" must list at least one window");
    for (const auto& v : video) d.video.push_back(path_field(v, "video", base, path, line));
    d.audio = path_field(field(obj, "audio", path, line), "audio", base, path, line);
    d.text = path_field(field(obj, "text", path, line), "text", base, path, line);
    out.push_back(std::move(d));
  }
  return out;
}

void write_manifest(const fs::path& path, std::span<const SampleDescriptor> samples) {
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  auto rel = [&](const fs::path& p) {
    const fs::path full = fs::absolute(p).lexically_normal();
    const auto r = full.lexically_relative(base);
    return (r.empty() ? full : r).generic_string();
  };
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& s : samples) {
    json obj;
    obj["id"] = s.id;
    obj["split"] = std::string(to_string(s.split));
    obj["label"] = s.label ? json(*s.label) : json(nullptr);
    json video = json::array();
    for (const auto& v : s.video) video.push_back(rel(v));
    obj["video"] = std::move(video);
    obj["audio"] = rel(s.audio);
    obj["text"] = rel(s.text);
    out << obj.dump() << '\n';
  }
  if (!out) throw DataError("write failed for manifest " + path.string());
}

}  // namespace caah::data
