#include "caah/data/synth.hpp"

#include <cmath>

#include "caah/errors.hpp"
#include "caah/nn/rng.hpp"

namespace caah::data {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (n_per_class < 1 || dim < 1 || video_len < 1 || audio_len < 1 || text_len < 1 || windows < 1) {
    throw ConfigError("synth: all counts must be >= 1");
  }
  if (!(signal > 0.0)) throw ConfigError("synth: signal must be > 0");
  if (!(noise >= 0.0)) throw ConfigError("synth: noise must be >= 0");
  if (!(audio_signal >= 0.0)) throw ConfigError("synth: audio_signal must be >= 0");
  if (train_fraction < 0.0 || val_fraction < 0.0 || train_fraction + val_fraction > 1.0) {
    throw ConfigError("synth: split fractions must be non-negative and sum to at most 1");
  }
}

SplitCounts split_counts(const SynthConfig& cfg) {
  const auto n = static_cast<double>(cfg.n_per_class);
  SplitCounts c;
  c.train = static_cast<std::size_t>(std::llround(cfg.train_fraction * n));
  c.val = std::min(cfg.n_per_class - c.train, static_cast<std::size_t>(std::llround(cfg.val_fraction * n)));
  c.test = cfg.n_per_class - c.train - c.val;
  return c;
}

namespace {

EmbeddingSequence noisy_sequence(nn::Rng& rng, std::size_t length, std::size_t dim,
                                 const std::vector<double>& mean, double noise) {
  EmbeddingSequence s;
  s.length = static_cast<std::uint32_t>(length);
  s.dim = static_cast<std::uint32_t>(dim);
  s.valid_count = s.length;
  s.tokens.resize(length * dim);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t k = 0; k < dim; ++k) s.tokens[i * dim + k] = static_cast<float>(mean[k] + noise * rng.normal());
  return s;
}

std::string sample_id(std::size_t index) {
  std::string digits = std::to_string(index);
  return "synth_" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

}  // namespace

SynthDataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  nn::Rng rng(nn::derive_seed(cfg.seed, "synth"));
  SynthDataset out;

  std::vector<double> u(cfg.dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& x : u) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  }
  for (auto& x : u) x /= norm;
  out.direction.assign(u.begin(), u.end());

  auto make = [&](const std::string& id, int cls, Split split, bool labelled) {
    const double r = rng.bernoulli(0.5) ? 1.0 : -1.0;
    std::vector<double> video_mean(cfg.dim), text_mean(cfg.dim), audio_mean(cfg.dim);
    for (std::size_t k = 0; k < cfg.dim; ++k) {
      video_mean[k] = r * cfg.signal * u[k];
      text_mean[k] = (cls == 1 ? -1.0 : 1.0) * video_mean[k];
      audio_mean[k] = cfg.audio_signal * video_mean[k];
    }
    Sample s;
    s.id = id;
    s.split = split;
    if (labelled) s.label = cls;
    for (std::size_t w = 0; w < cfg.windows; ++w)
      s.video_windows.push_back(noisy_sequence(rng, cfg.video_len, cfg.dim, video_mean, cfg.noise));
    std::size_t audio_len = cfg.audio_len;
    if (cfg.vary_audio_length) {
      const std::size_t lo = (cfg.audio_len + 1) / 2;
      audio_len = lo + static_cast<std::size_t>(rng.below(cfg.audio_len - lo + 1));
    }
    s.audio = noisy_sequence(rng, audio_len, cfg.dim, audio_mean, cfg.noise);
    s.text = noisy_sequence(rng, cfg.text_len, cfg.dim, text_mean, cfg.noise);
    out.samples.push_back(std::move(s));
    out.true_labels.push_back(cls);
  };

  const SplitCounts counts = split_counts(cfg);
  std::size_t index = 0;
  for (std::size_t j = 0; j < cfg.n_per_class; ++j) {
    const Split split = j < counts.train ? Split::train : j < counts.train + counts.val ? Split::val : Split::test;
    for (int cls : {0, 1}) make(sample_id(index++), cls, split, true);
  }
  for (std::size_t j = 0; j < cfg.n_unlabeled; ++j) {
    const int cls = rng.bernoulli(0.5) ? 1 : 0;
    make(sample_id(index++), cls, Split::test_unlabeled, false);
  }
  return out;
}

fs::path write_dataset(const fs::path& dir, std::span<const Sample> samples) {
  const fs::path emb = dir / "emb";
  fs::create_directories(emb);
  std::vector<SampleDescriptor> descriptors;
  for (const auto& s : samples) {
    SampleDescriptor d;
    d.id = s.id;
    d.split = s.split;
    d.label = s.label;
    for (std::size_t k = 0; k < s.video_windows.size(); ++k) {
      d.video.push_back(emb / (s.id + "_v" + std::to_string(k) + ".caah"));
      write_embedding(d.video.back(), s.video_windows[k]);
    }
    d.audio = emb / (s.id + "_a.caah");
    write_embedding(d.audio, s.audio);
    d.text = emb / (s.id + "_t.caah");
    write_embedding(d.text, s.text);
    descriptors.push_back(std::move(d));
  }
  const fs::path manifest = dir / "manifest.jsonl";
  write_manifest(manifest, descriptors);
  return manifest;
}

}  // namespace caah::data
