#include "caah/model/forward.hpp"

#include "caah/errors.hpp"

namespace caah::model {

namespace {

template <typename T>
nn::Expr<T> tokens_constant(nn::Graph<T>& g, const data::ModalityBatch& m) {
  std::vector<T> values(m.tokens.begin(), m.tokens.end());
  return g.constant(nn::Tensor<T>({m.batch, m.length, m.dim}, std::move(values)));
}

template <typename T>
struct Context {
  nn::Graph<T>& g;
  Mode mode;
  nn::Rng* rng;
  T dropout;
  T eps;

  nn::Expr<T> param(nn::Parameter<T>& p) { return g.parameter(p); }

  nn::Expr<T> linear(nn::Expr<T> x, LinearParams<T>& l) {
    return nn::linear(x, param(l.weight), param(l.bias));
  }

  nn::Expr<T> drop(nn::Expr<T> x) {
    if (mode != Mode::train || dropout == T{0}) return x;
    if (!rng) throw std::invalid_argument("forward: train mode with dropout needs an rng");
    return nn::dropout(x, dropout, *rng);
  }

  nn::Expr<T> mlp(nn::Expr<T> x, MlpParams<T>& m) {
    auto h = nn::layer_norm(x, param(m.norm.gain), param(m.norm.bias), eps);
    h = drop(nn::gelu(linear(h, m.first)));
    return linear(h, m.second);
  }
};

}  // namespace

template <typename T>
nn::Expr<T> attention_pool(nn::Expr<T> seq, std::span<const std::uint8_t> mask, nn::Expr<T> query) {
  auto weights = nn::masked_softmax(nn::attention_scores(seq, query), mask);
  return nn::weighted_sum(weights, seq);
}

template <typename T>
std::array<nn::Expr<T>, 3> conflict_features(nn::Expr<T> video, nn::Expr<T> audio, nn::Expr<T> text) {
  return {nn::abs(nn::sub(video, audio)), nn::abs(nn::sub(video, text)), nn::abs(nn::sub(audio, text))};
}

template <typename T>
ForwardResult<T> forward(nn::Graph<T>& g, ModelParams<T>& params, const data::Batch& batch, Mode mode,
                         nn::Rng* dropout_rng) {
  const ModelConfig& cfg = params.config;
  if (batch.size() == 0) throw DataError("forward: empty batch");
  if (batch.dim() != cfg.input_dim) {
    throw DataError("forward: batch dim " + std::to_string(batch.dim()) + " does not match model input dim " +
                    std::to_string(cfg.input_dim));
  }
  Context<T> ctx{g, mode, dropout_rng, static_cast<T>(cfg.dropout), static_cast<T>(cfg.layer_norm_eps)};
  const std::size_t b = batch.size(), d = cfg.model_dim;

  auto pooled = [&](bool enabled, const data::ModalityBatch& m, LinearParams<T>& proj, nn::Parameter<T>& query) {
    if (!enabled) return g.constant(nn::Tensor<T>({b, d}));
    auto projected = ctx.linear(tokens_constant(g, m), proj);
    return attention_pool(projected, std::span<const std::uint8_t>(m.mask), ctx.param(query));
  };

  ForwardResult<T> r;
  r.video = pooled(cfg.modalities.video, batch.video, params.proj_video, params.query_video);
  r.audio = pooled(cfg.modalities.audio, batch.audio, params.proj_audio, params.query_audio);
  r.text = pooled(cfg.modalities.text, batch.text, params.proj_text, params.query_text);

  std::vector<nn::Expr<T>> parts{r.video, r.audio, r.text};
  if (cfg.conflict_features) {
    for (auto c : conflict_features(r.video, r.audio, r.text)) parts.push_back(c);
  }
  r.fused = nn::concat(parts);

  auto fused = ctx.mlp(r.fused, params.fusion);
  fused = ctx.mlp(fused, params.head_full);
  r.logit_full = fused;

  auto text = r.text;
  if (cfg.text_head_ffn) text = ctx.mlp(text, params.text_ffn);
  r.logit_text = ctx.mlp(text, params.head_text);
  return r;
}

double blend(double logit_text, double logit_full, double alpha) {
  return alpha * nn::sigmoid(logit_text) + (1.0 - alpha) * nn::sigmoid(logit_full);
}

template nn::Expr<float> attention_pool<float>(nn::Expr<float>, std::span<const std::uint8_t>, nn::Expr<float>);
template nn::Expr<double> attention_pool<double>(nn::Expr<double>, std::span<const std::uint8_t>, nn::Expr<double>);
template std::array<nn::Expr<float>, 3> conflict_features<float>(nn::Expr<float>, nn::Expr<float>, nn::Expr<float>);
template std::array<nn::Expr<double>, 3> conflict_features<double>(nn::Expr<double>, nn::Expr<double>,
                                                                   nn::Expr<double>);
template ForwardResult<float> forward<float>(nn::Graph<float>&, ModelParams<float>&, const data::Batch&, Mode,
                                             nn::Rng*);
template ForwardResult<double> forward<double>(nn::Graph<double>&, ModelParams<double>&, const data::Batch&, Mode,
                                               nn::Rng*);

}  // namespace caah::model
