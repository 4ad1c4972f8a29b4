#include "caah/cli/run_config.hpp"

#include <fstream>

#include "caah/errors.hpp"
#include "caah/json_util.hpp"

namespace caah::cli {

using nlohmann::json;

void RunConfig::apply_seed() {
  if (!seed) return;
  synth.seed = *seed;
  train.seed = *seed;
  gradcheck.seed = *seed;
}

json to_json(const data::SynthConfig& c) {
  return json{{"n_per_class", c.n_per_class},
              {"dim", c.dim},
              {"video_len", c.video_len},
              {"audio_len", c.audio_len},
              {"text_len", c.text_len},
              {"windows", c.windows},
              {"signal", c.signal},
              {"noise", c.noise},
              {"audio_signal", c.audio_signal},
              {"vary_audio_length", c.vary_audio_length},
              {"train_fraction", c.train_fraction},
              {"val_fraction", c.val_fraction},
              {"n_unlabeled", c.n_unlabeled},
              {"seed", c.seed}};
}

data::SynthConfig synth_config_from_json(const json& j) {
  data::SynthConfig c;
  StrictObject o(j, "synth");
  o.read("n_per_class", c.n_per_class);
  o.read("dim", c.dim);
  o.read("video_len", c.video_len);
  o.read("audio_len", c.audio_len);
  o.read("text_len", c.text_len);
  o.read("windows", c.windows);
  o.read("signal", c.signal);
  o.read("noise", c.noise);
  o.read("audio_signal", c.audio_signal);
  o.read("vary_audio_length", c.vary_audio_length);
  o.read("train_fraction", c.train_fraction);
  o.read("val_fraction", c.val_fraction);
  o.read("n_unlabeled", c.n_unlabeled);
  o.read("seed", c.seed);
  o.finish();
  return c;
}

namespace {

json to_json(const EvalBlock& e) {
  json j{{"alpha", e.alpha}, {"n_windows", e.n_windows}, {"checkpoints", e.checkpoints}};
  j["threshold"] = e.threshold ? json(*e.threshold) : json(nullptr);
  j["split"] = e.split ? json(*e.split) : json(nullptr);
  return j;
}

EvalBlock eval_block_from_json(const json& j) {
  EvalBlock e;
  StrictObject o(j, "eval");
  o.read("alpha", e.alpha);
  o.read("n_windows", e.n_windows);
  o.read("checkpoints", e.checkpoints);
  if (o.has("threshold") && !o.at("threshold").is_null()) {
    double t = 0.0;
    o.read("threshold", t);
    e.threshold = t;
  }
  if (o.has("split") && !o.at("split").is_null()) {
    std::string s;
    o.read("split", s);
    e.split = s;
  }
  o.finish();
  return e;
}

json to_json(const eval::AblationGrid& g) {
  std::vector<std::string> subsets;
  for (const auto& m : g.subsets) subsets.push_back(m.to_string());
  return json{{"conflict", g.conflict},
              {"alphas", g.alphas},
              {"subsets", subsets},
              {"n_windows", g.n_windows},
              {"ensemble_sizes", g.ensemble_sizes}};
}

eval::AblationGrid grid_from_json(const json& j) {
  eval::AblationGrid g;
  StrictObject o(j, "ablate");
  o.read("conflict", g.conflict);
  o.read("alphas", g.alphas);
  if (o.has("subsets")) {
    std::vector<std::string> s;
    o.read("subsets", s);
    g.subsets.clear();
    for (const auto& m : s) g.subsets.push_back(model::Modalities::parse(m));
  }
  o.read("n_windows", g.n_windows);
  o.read("ensemble_sizes", g.ensemble_sizes);
  o.finish();
  return g;
}

json to_json(const train::ModelGradCheckSetup& s) {
  return json{{"dim", s.dim},
              {"head_hidden", s.head_hidden},
              {"max_length", s.max_length},
              {"batch", s.batch},
              {"seed", s.seed},
              {"conflict_features", s.conflict_features},
              {"text_head_ffn", s.text_head_ffn},
              {"modalities", s.modalities.to_string()},
              {"label_smoothing", s.label_smoothing},
              {"loss_weight", s.loss_weight},
              {"pos_weight", s.pos_weight}};
}

train::ModelGradCheckSetup gradcheck_from_json(const json& j) {
  train::ModelGradCheckSetup s;
  StrictObject o(j, "gradcheck");
  o.read("dim", s.dim);
  o.read("head_hidden", s.head_hidden);
  o.read("max_length", s.max_length);
  o.read("batch", s.batch);
  o.read("seed", s.seed);
  o.read("conflict_features", s.conflict_features);
  o.read("text_head_ffn", s.text_head_ffn);
  if (o.has("modalities")) {
    std::string m;
    o.read("modalities", m);
    s.modalities = model::Modalities::parse(m);
  }
  o.read("label_smoothing", s.label_smoothing);
  o.read("loss_weight", s.loss_weight);
  o.read("pos_weight", s.pos_weight);
  o.finish();
  return s;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  StrictObject o(j, "config");
  if (o.has("command")) {
    std::string s;
    o.read("command", s);
    c.command = s;
  }
  if (o.has("seed")) {
    std::uint64_t s = 0;
    o.read("seed", s);
    c.seed = s;
  }
  if (o.has("output")) {
    std::string s;
    o.read("output", s);
    c.output = s;
  }
  if (o.has("data")) {
    StrictObject d(o.at("data"), "data");
    if (d.has("manifest")) {
      std::string s;
      d.read("manifest", s);
      c.manifest = s;
    }
    d.finish();
  }
  if (o.has("synth")) c.synth = synth_config_from_json(o.at("synth"));
  if (o.has("train")) c.train = train::train_config_from_json(o.at("train"));
  if (o.has("eval")) c.eval = eval_block_from_json(o.at("eval"));
  if (o.has("ablate")) c.ablate = grid_from_json(o.at("ablate"));
  if (o.has("gradcheck")) c.gradcheck = gradcheck_from_json(o.at("gradcheck"));
  o.finish();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json resolved_json(const RunConfig& c, const std::string& command) {
  json j{{"command", command}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.output) j["output"] = *c.output;
  const bool data = command != "synth" && command != "gradcheck";
  if (data && c.manifest) j["data"] = json{{"manifest", *c.manifest}};
  if (command == "synth") j["synth"] = to_json(c.synth);
  if (command == "train" || command == "ablate") j["train"] = train::to_json(c.train);
  if (command == "calibrate" || command == "evaluate" || command == "predict") j["eval"] = to_json(c.eval);
  if (command == "ablate") j["ablate"] = to_json(c.ablate);
  if (command == "gradcheck") j["gradcheck"] = to_json(c.gradcheck);
  return j;
}

}  // namespace caah::cli
