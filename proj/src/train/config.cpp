#include "caah/train/config.hpp"

#include "caah/json_util.hpp"

namespace caah::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !(min_lr >= 0.0) || min_lr > lr) throw ConfigError("train: need 0 <= min_lr <= lr");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be > 0");
  if (batch_size < 1 || accum_steps < 1 || max_epochs < 1) {
    throw ConfigError("train: batch_size, accum_steps and max_epochs must be >= 1");
  }
  if (patience > max_epochs) throw ConfigError("train: patience must not exceed max_epochs");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw ConfigError("train: label_smoothing must lie in [0, 1)");
  if (!(loss_weight >= 0.0 && loss_weight <= 1.0)) throw ConfigError("train: loss_weight must lie in [0, 1]");
  if (pos_weight && !(*pos_weight > 0.0)) throw ConfigError("train: pos_weight must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train: dropout must lie in [0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("train: alpha must lie in [0, 1]");
  if (head_hidden < 1) throw ConfigError("train: head_hidden must be >= 1");
}

model::ModelConfig TrainConfig::model_config(std::size_t input_dim) const {
  model::ModelConfig m;
  m.input_dim = input_dim;
  m.model_dim = model_dim == 0 ? input_dim : model_dim;
  m.head_hidden = head_hidden;
  m.dropout = dropout;
  m.conflict_features = conflict_features;
  m.text_head_ffn = text_head_ffn;
  m.modalities = modalities;
  m.validate();
  return m;
}

json to_json(const TrainConfig& c) {
  return json{{"lr", c.lr},
              {"min_lr", c.min_lr},
              {"weight_decay", c.weight_decay},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"accum_steps", c.accum_steps},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"label_smoothing", c.label_smoothing},
              {"loss_weight", c.loss_weight},
              {"pos_weight", c.pos_weight ? json(*c.pos_weight) : json(nullptr)},
              {"dropout", c.dropout},
              {"seed", c.seed},
              {"conflict_features", c.conflict_features},
              {"modalities", c.modalities.to_string()},
              {"model_dim", c.model_dim},
              {"head_hidden", c.head_hidden},
              {"text_head_ffn", c.text_head_ffn},
              {"alpha", c.alpha},
              {"sweep", c.sweep == SweepSource::blend ? "blend" : "full"}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  StrictObject o(j, "train");
  o.read("lr", c.lr);
  o.read("min_lr", c.min_lr);
  o.read("weight_decay", c.weight_decay);
  o.read("beta1", c.beta1);
  o.read("beta2", c.beta2);
  o.read("adam_eps", c.adam_eps);
  o.read("batch_size", c.batch_size);
  o.read("accum_steps", c.accum_steps);
  o.read("max_epochs", c.max_epochs);
  o.read("patience", c.patience);
  o.read("label_smoothing", c.label_smoothing);
  o.read("loss_weight", c.loss_weight);
  if (o.has("pos_weight")) {
    const auto& pw = o.at("pos_weight");
    if (pw.is_null()) c.pos_weight.reset();
    else if (pw.is_number()) c.pos_weight = pw.get<double>();
    else throw ConfigError("train.pos_weight: expected a number or null");
  }
  o.read("dropout", c.dropout);
  o.read("seed", c.seed);
  o.read("conflict_features", c.conflict_features);
  if (o.has("modalities")) {
    std::string m;
    o.read("modalities", m);
    c.modalities = model::Modalities::parse(m);
  }
  o.read("model_dim", c.model_dim);
  o.read("head_hidden", c.head_hidden);
  o.read("text_head_ffn", c.text_head_ffn);
  o.read("alpha", c.alpha);
  if (o.has("sweep")) {
    std::string s;
    o.read("sweep", s);
    if (s == "blend") c.sweep = SweepSource::blend;
    else if (s == "full") c.sweep = SweepSource::full;
    else throw ConfigError("train.sweep: expected \"blend\" or \"full\"");
  }
  o.finish();
  c.validate();
  return c;
}

json to_json(const model::ModelConfig& c) {
  return json{{"input_dim", c.input_dim},
              {"model_dim", c.model_dim},
              {"head_hidden", c.head_hidden},
              {"dropout", c.dropout},
              {"layer_norm_eps", c.layer_norm_eps},
              {"conflict_features", c.conflict_features},
              {"text_head_ffn", c.text_head_ffn},
              {"modalities", c.modalities.to_string()}};
}

model::ModelConfig model_config_from_json(const json& j) {
  model::ModelConfig c;
  StrictObject o(j, "model");
  o.read("input_dim", c.input_dim);
  o.read("model_dim", c.model_dim);
  o.read("head_hidden", c.head_hidden);
  o.read("dropout", c.dropout);
  o.read("layer_norm_eps", c.layer_norm_eps);
  o.read("conflict_features", c.conflict_features);
  o.read("text_head_ffn", c.text_head_ffn);
  if (o.has("modalities")) {
    std::string m;
    o.read("modalities", m);
    c.modalities = model::Modalities::parse(m);
  }
  o.finish();
  c.validate();
  return c;
}

}  // namespace caah::train
