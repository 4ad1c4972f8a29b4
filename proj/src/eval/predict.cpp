#include "caah/eval/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "caah/data/batch.hpp"
#include "caah/errors.hpp"
#include "caah/model/forward.hpp"
#include "caah/nn/rng.hpp"

namespace caah::eval {

namespace {

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace

ModelScorer::ModelScorer(model::ModelParams<float> params, std::string id, std::size_t chunk)
    : params_(std::move(params)), id_(std::move(id)), chunk_(std::max<std::size_t>(chunk, 1)) {}

std::vector<BranchLogits> ModelScorer::score(std::span<const WindowRef> items) const {
  std::vector<BranchLogits> out;
  out.reserve(items.size());
  for (std::size_t start = 0; start < items.size(); start += chunk_) {
    const std::size_t end = std::min(items.size(), start + chunk_);
    std::vector<const data::Sample*> samples;
    std::vector<std::size_t> windows;
    for (std::size_t i = start; i < end; ++i) {
      samples.push_back(items[i].sample);
      windows.push_back(items[i].window);
    }
    const auto batch = data::make_batch(samples, windows);
    nn::Graph<float> g(false);
    const auto r = model::forward(g, params_, batch, model::Mode::eval);
    const auto& text = r.logit_text.value();
    const auto& full = r.logit_full.value();
    const auto& v = r.video.value();
    const auto& t = r.text.value();
    const std::size_t d = v.last_dim();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      double norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = static_cast<double>(v[b * d + k]) - static_cast<double>(t[b * d + k]);
        norm += diff * diff;
      }
      out.push_back({text[b], full[b], std::sqrt(norm)});
    }
  }
  return out;
}

std::vector<std::size_t> choose_windows(const data::Sample& sample, std::size_t n, std::uint64_t seed) {
  const std::size_t available = sample.video_windows.size();
  if (available == 0) throw DataError("sample " + sample.id + " has no video windows");
  if (n == 0) throw std::invalid_argument("choose_windows: n must be >= 1");
  std::vector<std::size_t> idx(available);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n >= available) return idx;
  nn::Rng rng(nn::derive_seed(seed, "inference-windows", nn::fnv1a64(sample.id)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(available - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<SamplePrediction> predict(std::span<const data::Sample* const> samples,
                                      std::span<const Scorer* const> scorers, const InferenceConfig& config) {
  if (scorers.empty()) throw std::invalid_argument("predict: at least one checkpoint required");
  if (config.alpha < 0.0 || config.alpha > 1.0) throw std::invalid_argument("predict: alpha outside [0, 1]");

  std::vector<WindowRef> items;
  std::vector<std::size_t> offsets{0};
  for (const auto* s : samples) {
    for (auto w : choose_windows(*s, config.n_windows, config.seed)) items.push_back({s, w});
    offsets.push_back(items.size());
  }

  std::vector<std::vector<double>> per_scorer_prob(samples.size());
  std::vector<std::vector<double>> per_scorer_norm(samples.size());
  for (const auto* scorer : scorers) {
    const auto logits = scorer->score(items);
    if (logits.size() != items.size()) throw std::logic_error("scorer " + scorer->id() + " returned wrong count");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::vector<double> probs, norms;
      for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
        probs.push_back(model::blend(logits[k].text, logits[k].full, config.alpha));
        norms.push_back(logits[k].conflict_vt_norm);
      }
      per_scorer_prob[i].push_back(sorted_mean(std::move(probs)));
      per_scorer_norm[i].push_back(sorted_mean(std::move(norms)));
    }
  }

  std::vector<SamplePrediction> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SamplePrediction p;
    p.id = samples[i]->id;
    p.label = samples[i]->label;
    p.probability = sorted_mean(std::move(per_scorer_prob[i]));
    p.conflict_vt_norm = sorted_mean(std::move(per_scorer_norm[i]));
    p.windows_used = offsets[i + 1] - offsets[i];
    out.push_back(std::move(p));
  }
  return out;
}

double predict_sample(const data::Sample& sample, std::span<const Scorer* const> scorers,
                      const InferenceConfig& config) {
  const data::Sample* one[] = {&sample};
  return predict(one, scorers, config).front().probability;
}

}  // namespace caah::eval
