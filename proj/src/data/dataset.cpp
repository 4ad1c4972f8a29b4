#include "caah/data/dataset.hpp"

#include "caah/errors.hpp"

namespace caah::data {

void Sample::validate() const {
  if (video_windows.empty()) throw DataError("sample " + id + ": no video windows");
  const auto d = text.dim;
  auto check = [&](const EmbeddingSequence& s, const std::string& what) {
    s.validate();
    if (s.dim != d) {
      throw DataError("sample " + id + ": " + what + " has dim " + std::to_string(s.dim) +
                      ", text has dim " + std::to_string(d));
    }
  };
  check(text, "text");
  check(audio, "audio");
  for (std::size_t k = 0; k < video_windows.size(); ++k) check(video_windows[k], "video window " + std::to_string(k));
  if (is_labelled(split) != label.has_value()) {
    throw DataError("sample " + id + ": label presence does not match split " + std::string(to_string(split)));
  }
}

Sample load_sample(const SampleDescriptor& d) {
  Sample s;
  s.id = d.id;
  s.split = d.split;
  s.label = d.label;
  for (const auto& p : d.video) s.video_windows.push_back(read_embedding(p));
  s.audio = read_embedding(d.audio);
  s.text = read_embedding(d.text);
  try {
    s.validate();
  } catch (const DataError& e) {
    throw DataError("manifest line " + std::to_string(d.line) + ": " + e.what());
  }
  return s;
}

Dataset::Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
  for (const auto& s : samples_) {
    s.validate();
    if (s.dim() != samples_.front().dim()) {
      throw DataError("sample " + s.id + " has dim " + std::to_string(s.dim()) + ", dataset dim is " +
                      std::to_string(samples_.front().dim()));
    }
  }
}

Dataset Dataset::load(const std::filesystem::path& manifest) {
  std::vector<Sample> samples;
  for (const auto& d : read_manifest(manifest)) samples.push_back(load_sample(d));
  return Dataset(std::move(samples));
}

std::vector<const Sample*> Dataset::split(Split which) const {
  std::vector<const Sample*> out;
  for (const auto& s : samples_)
    if (s.split == which) out.push_back(&s);
  return out;
}

}  // namespace caah::data
