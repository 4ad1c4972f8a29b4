#include "caah/train/model_grad_check.hpp"

#include "caah/data/batch.hpp"
#include "caah/model/forward.hpp"
#include "caah/model/params.hpp"
#include "caah/nn/rng.hpp"
#include "caah/train/loss.hpp"

namespace caah::train {

namespace {

data::EmbeddingSequence random_sequence(nn::Rng& rng, std::size_t dim, std::size_t max_length) {
  data::EmbeddingSequence s;
  s.dim = static_cast<std::uint32_t>(dim);
  s.length = static_cast<std::uint32_t>(max_length);
  s.valid_count = static_cast<std::uint32_t>(1 + rng.below(max_length));
  s.tokens.assign(max_length * dim, 0.0f);
  for (std::size_t i = 0; i < s.valid_count * dim; ++i) s.tokens[i] = static_cast<float>(rng.normal());
  return s;
}

template <typename T>
void jitter(nn::Parameter<T>& p, nn::Rng& rng, double mean, double scale) {
  for (auto& v : p.value.storage()) v = static_cast<T>(mean + scale * rng.normal());
}

}  // namespace

std::vector<data::Sample> random_samples(std::size_t count, std::size_t dim, std::size_t max_length,
                                         std::size_t windows, std::uint64_t seed) {
  nn::Rng rng(nn::derive_seed(seed, "fixture"));
  std::vector<data::Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    data::Sample s;
    s.id = "fixture_" + std::to_string(i);
    s.split = data::Split::train;
    s.label = static_cast<int>(i % 2);
    for (std::size_t w = 0; w < windows; ++w) s.video_windows.push_back(random_sequence(rng, dim, max_length));
    s.audio = random_sequence(rng, dim, max_length);
    s.text = random_sequence(rng, dim, max_length);
    out.push_back(std::move(s));
  }
  return out;
}

nn::GradCheckReport check_model_gradients(const ModelGradCheckSetup& setup, const nn::GradCheckOptions& options) {
  model::ModelConfig cfg;
  cfg.input_dim = setup.dim;
  cfg.model_dim = setup.dim;
  cfg.head_hidden = setup.head_hidden;
  cfg.dropout = 0.0;
  cfg.conflict_features = setup.conflict_features;
  cfg.text_head_ffn = setup.text_head_ffn;
  cfg.modalities = setup.modalities;
  auto params = model::init_model(cfg, setup.seed).cast<double>();

  // Move away from the symmetric initial point so queries, gains and biases
  // receive generic gradients.
  nn::Rng rng(nn::derive_seed(setup.seed, "gradcheck"));
  for (auto& [name, p] : params.named()) {
    const bool gain = name.ends_with(".gain");
    const bool bias = name.ends_with(".bias");
    const bool query = name.starts_with("query_");
    if (gain) jitter(*p, rng, 1.0, 0.1);
    if (bias || query) jitter(*p, rng, 0.0, query ? 0.5 : 0.1);
  }

  const auto samples = random_samples(setup.batch, setup.dim, setup.max_length, 1, setup.seed);
  std::vector<const data::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const std::vector<std::size_t> windows(ptrs.size(), 0);
  const auto batch = data::make_batch(ptrs, windows);
  std::vector<double> targets;
  for (const auto& y : batch.labels) targets.push_back(smooth_label(*y, setup.label_smoothing));

  const nn::Objective objective = [&](nn::Graph<double>& g) {
    const auto r = model::forward(g, params, batch, model::Mode::eval);
    return joint_loss<double>(r.logit_full, r.logit_text, targets, setup.loss_weight, setup.pos_weight);
  };
  std::vector<nn::NamedParameter> named;
  for (auto& [name, p] : params.named()) named.push_back({name, p});
  return nn::grad_check(objective, named, options);
}

}  // namespace caah::train
