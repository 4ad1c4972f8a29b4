#include "caah/model/config.hpp"

#include "caah/errors.hpp"

namespace caah::model {

std::string Modalities::to_string() const {
  std::string s;
  if (video) s += 'v';
  if (audio) s += 'a';
  if (text) s += 't';
  return s;
}

Modalities Modalities::parse(std::string_view letters) {
  Modalities m{false, false, false};
  for (char c : letters) {
    bool* slot = c == 'v' ? &m.video : c == 'a' ? &m.audio : c == 't' ? &m.text : nullptr;
    if (!slot) throw ConfigError("modalities: unknown letter '" + std::string(1, c) + "' (use v, a, t)");
    if (*slot) throw ConfigError("modalities: duplicate letter '" + std::string(1, c) + "'");
    *slot = true;
  }
  if (!m.video && !m.audio && !m.text) throw ConfigError("modalities: at least one of v, a, t required");
  return m;
}

void ModelConfig::validate() const {
  if (input_dim < 1 || model_dim < 1 || head_hidden < 1) throw ConfigError("model dims must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be > 0");
  if (!modalities.video && !modalities.audio && !modalities.text) {
    throw ConfigError("at least one modality must be enabled");
  }
}

}  // namespace caah::model
