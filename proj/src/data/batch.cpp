#include "caah/data/batch.hpp"

#include <algorithm>

#include "caah/errors.hpp"

namespace caah::data {

namespace {

ModalityBatch pad(const std::vector<const EmbeddingSequence*>& seqs, std::size_t dim) {
  ModalityBatch mb;
  mb.batch = seqs.size();
  mb.dim = dim;
  for (const auto* s : seqs) mb.length = std::max<std::size_t>(mb.length, s->length);
  mb.tokens.assign(mb.batch * mb.length * dim, 0.0f);
  mb.mask.assign(mb.batch * mb.length, 0);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const auto* s = seqs[b];
    // Only the valid prefix is copied; stored padding never reaches the batch.
    std::copy_n(s->tokens.begin(), static_cast<std::size_t>(s->valid_count) * dim,
                mb.tokens.begin() + static_cast<std::ptrdiff_t>(b * mb.length * dim));
    std::fill_n(mb.mask.begin() + static_cast<std::ptrdiff_t>(b * mb.length), s->valid_count, 1);
  }
  return mb;
}

}  // namespace

Batch make_batch(std::span<const Sample* const> samples, std::span<const std::size_t> window_choice) {
  if (samples.empty()) throw DataError("make_batch: empty batch");
  if (window_choice.size() != samples.size()) {
    throw DataError("make_batch: " + std::to_string(window_choice.size()) + " window choices for " +
                    std::to_string(samples.size()) + " samples");
  }
  const std::size_t dim = samples.front()->dim();
  std::vector<const EmbeddingSequence*> video, audio, text;
  Batch batch;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = *samples[i];
    if (s.dim() != dim) {
      throw DataError("make_batch: sample " + s.id + " has dim " + std::to_string(s.dim()) +
                      ", batch dim is " + std::to_string(dim));
    }
    if (window_choice[i] >= s.video_windows.size()) {
      throw DataError("make_batch: window " + std::to_string(window_choice[i]) + " out of range for sample " +
                      s.id + " with " + std::to_string(s.video_windows.size()) + " windows");
    }
    video.push_back(&s.video_windows[window_choice[i]]);
    audio.push_back(&s.audio);
    text.push_back(&s.text);
    batch.labels.push_back(s.label);
  }
  batch.video = pad(video, dim);
  batch.audio = pad(audio, dim);
  batch.text = pad(text, dim);
  return batch;
}

}  // namespace caah::data
