#include "caah/model/params.hpp"

#include <cmath>

#include "caah/nn/rng.hpp"

namespace caah::model {

namespace {

template <typename T>
LinearParams<T> linear_shape(std::size_t in, std::size_t out) {
  return {nn::Parameter<T>(nn::Tensor<T>({in, out})), nn::Parameter<T>(nn::Tensor<T>({out}))};
}

template <typename T>
LayerNormParams<T> norm_shape(std::size_t n) {
  return {nn::Parameter<T>(nn::Tensor<T>({n}, T{1})), nn::Parameter<T>(nn::Tensor<T>({n}))};
}

template <typename T>
MlpParams<T> mlp_shape(std::size_t in, std::size_t hidden, std::size_t out) {
  return {norm_shape<T>(in), linear_shape<T>(in, hidden), linear_shape<T>(hidden, out)};
}

template <typename P, typename F>
void for_each_named(P& p, F&& f) {
  auto linear = [&](const std::string& name, auto& l) {
    f(name + ".weight", l.weight);
    f(name + ".bias", l.bias);
  };
  auto mlp = [&](const std::string& name, auto& m) {
    f(name + ".norm.gain", m.norm.gain);
    f(name + ".norm.bias", m.norm.bias);
    linear(name + ".first", m.first);
    linear(name + ".second", m.second);
  };
  linear("proj_video", p.proj_video);
  linear("proj_audio", p.proj_audio);
  linear("proj_text", p.proj_text);
  f("query_video", p.query_video);
  f("query_audio", p.query_audio);
  f("query_text", p.query_text);
  mlp("fusion", p.fusion);
  mlp("head_full", p.head_full);
  if (p.config.text_head_ffn) mlp("text_ffn", p.text_ffn);
  mlp("head_text", p.head_text);
}

template <typename T, typename U>
LinearParams<U> cast_linear(const LinearParams<T>& l) {
  return {l.weight.template cast<U>(), l.bias.template cast<U>()};
}

template <typename T, typename U>
MlpParams<U> cast_mlp(const MlpParams<T>& m) {
  return {{m.norm.gain.template cast<U>(), m.norm.bias.template cast<U>()},
          cast_linear<T, U>(m.first),
          cast_linear<T, U>(m.second)};
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, nn::Parameter<T>*>> ModelParams<T>::named() {
  std::vector<std::pair<std::string, nn::Parameter<T>*>> out;
  for_each_named(*this, [&](std::string name, nn::Parameter<T>& p) { out.emplace_back(std::move(name), &p); });
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const nn::Parameter<T>*>> ModelParams<T>::named() const {
  std::vector<std::pair<std::string, const nn::Parameter<T>*>> out;
  for_each_named(*this, [&](std::string name, const nn::Parameter<T>& p) { out.emplace_back(std::move(name), &p); });
  return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : named()) n += p->value.size();
  return n;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out;
  out.config = config;
  out.proj_video = cast_linear<T, U>(proj_video);
  out.proj_audio = cast_linear<T, U>(proj_audio);
  out.proj_text = cast_linear<T, U>(proj_text);
  out.query_video = query_video.template cast<U>();
  out.query_audio = query_audio.template cast<U>();
  out.query_text = query_text.template cast<U>();
  out.fusion = cast_mlp<T, U>(fusion);
  out.head_full = cast_mlp<T, U>(head_full);
  out.text_ffn = cast_mlp<T, U>(text_ffn);
  out.head_text = cast_mlp<T, U>(head_text);
  return out;
}

template <typename T>
ModelParams<T> allocate_model(const ModelConfig& config) {
  config.validate();
  const std::size_t in = config.input_dim, d = config.model_dim, f = config.fusion_dim();
  ModelParams<T> p;
  p.config = config;
  p.proj_video = linear_shape<T>(in, d);
  p.proj_audio = linear_shape<T>(in, d);
  p.proj_text = linear_shape<T>(in, d);
  p.query_video = nn::Parameter<T>(nn::Tensor<T>({d}));
  p.query_audio = nn::Parameter<T>(nn::Tensor<T>({d}));
  p.query_text = nn::Parameter<T>(nn::Tensor<T>({d}));
  p.fusion = mlp_shape<T>(f, 2 * f, f);
  p.head_full = mlp_shape<T>(f, config.head_hidden, 1);
  if (config.text_head_ffn) p.text_ffn = mlp_shape<T>(d, 2 * d, d);
  p.head_text = mlp_shape<T>(d, config.head_hidden, 1);
  return p;
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t in = c.input_dim, d = c.model_dim, f = c.fusion_dim(), h = c.head_hidden;
  auto linear = [](std::size_t a, std::size_t b) { return a * b + b; };
  auto mlp = [&](std::size_t a, std::size_t hidden, std::size_t b) { return 2 * a + linear(a, hidden) + linear(hidden, b); };
  std::size_t n = 3 * linear(in, d) + 3 * d;
  n += mlp(f, 2 * f, f) + mlp(f, h, 1) + mlp(d, h, 1);
  if (c.text_head_ffn) n += mlp(d, 2 * d, d);
  return n;
}

ModelParams<float> init_model(const ModelConfig& config, std::uint64_t seed) {
  auto p = allocate_model<float>(config);
  nn::Rng rng(nn::derive_seed(seed, "init"));
  for (auto& [name, param] : p.named()) {
    auto& v = param->value;
    if (v.rank() != 2) continue;  // biases, norms and queries keep their defaults
    const double bound = std::sqrt(1.0 / static_cast<double>(v.dim(0)));
    for (auto& x : v.values()) x = static_cast<float>(rng.uniform(-bound, bound));
  }
  return p;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<float> allocate_model<float>(const ModelConfig&);
template ModelParams<double> allocate_model<double>(const ModelConfig&);

}  // namespace caah::model
