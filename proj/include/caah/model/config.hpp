#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace caah::model {

// Which modalities feed the network. Excluded modalities are replaced by a
// zero pooled vector everywhere downstream.
struct Modalities {
  bool video = true;
  bool audio = true;
  bool text = true;

  // "vat", "vt", "a", ...
  std::string to_string() const;
  static Modalities parse(std::string_view letters);

  bool operator==(const Modalities&) const = default;
};

struct ModelConfig {
  std::size_t input_dim = 768;
  std::size_t model_dim = 768;
  std::size_t head_hidden = 512;
  double dropout = 0.3;
  double layer_norm_eps = 1e-5;
  bool conflict_features = true;
  // Gives the text head its own LayerNorm/Linear/GELU/Dropout/Linear block
  // (width 2D) ahead of the classification MLP.
  bool text_head_ffn = false;
  Modalities modalities;

  // Width of the fused vector: 6D with conflict features, 3D without.
  std::size_t fusion_dim() const { return (conflict_features ? 6 : 3) * model_dim; }
  void validate() const;
};

}  // namespace caah::model
