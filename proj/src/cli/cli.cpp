#include "caah/cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

#include "caah/cli/run_config.hpp"
#include "caah/errors.hpp"
#include "caah/eval/ablation.hpp"
#include "caah/eval/calibration.hpp"
#include "caah/eval/report.hpp"
#include "caah/json_util.hpp"
#include "caah/nn/grad_check.hpp"
#include "caah/train/trainer.hpp"

namespace caah::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Override = std::function<void(RunConfig&)>;

// Registers `name` on `app`; when the user passes it, `set` copies the parsed
// value into the run configuration after the config file has been read.
template <typename T, typename Set>
void option(CLI::App* app, std::vector<Override>& overrides, const std::string& name, const std::string& help,
            Set set) {
  auto value = std::make_shared<T>();
  auto* opt = app->add_option(name, *value, help);
  overrides.push_back([opt, value, set](RunConfig& c) {
    if (opt->count() > 0) set(c, *value);
  });
}

void flag(CLI::App* app, std::vector<Override>& overrides, const std::string& name, const std::string& help,
          std::function<void(RunConfig&)> set) {
  auto* opt = app->add_flag(name, help);
  overrides.push_back([opt, set](RunConfig& c) {
    if (opt->count() > 0) set(c);
  });
}

void common_options(CLI::App* app, std::vector<Override>& ov, std::string& config_path, bool data) {
  app->add_option("--config", config_path, "JSON run configuration");
  option<std::string>(app, ov, "--out", "Output directory", [](RunConfig& c, const std::string& v) { c.output = v; });
  option<std::uint64_t>(app, ov, "--seed", "Master seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  if (data) {
    option<std::string>(app, ov, "--manifest", "Dataset manifest (JSONL)",
                        [](RunConfig& c, const std::string& v) { c.manifest = v; });
  }
}

void train_options(CLI::App* app, std::vector<Override>& ov) {
  option<double>(app, ov, "--lr", "Peak learning rate", [](RunConfig& c, double v) { c.train.lr = v; });
  option<double>(app, ov, "--min-lr", "Final learning rate", [](RunConfig& c, double v) { c.train.min_lr = v; });
  option<double>(app, ov, "--weight-decay", "AdamW weight decay",
                 [](RunConfig& c, double v) { c.train.weight_decay = v; });
  option<std::size_t>(app, ov, "--batch-size", "Mini-batch size",
                      [](RunConfig& c, std::size_t v) { c.train.batch_size = v; });
  option<std::size_t>(app, ov, "--accum-steps", "Mini-batches per optimiser step",
                      [](RunConfig& c, std::size_t v) { c.train.accum_steps = v; });
  option<std::size_t>(app, ov, "--max-epochs", "Epoch limit", [](RunConfig& c, std::size_t v) { c.train.max_epochs = v; });
  option<std::size_t>(app, ov, "--patience", "Early-stopping patience",
                      [](RunConfig& c, std::size_t v) { c.train.patience = v; });
  option<double>(app, ov, "--label-smoothing", "Label smoothing epsilon",
                 [](RunConfig& c, double v) { c.train.label_smoothing = v; });
  option<double>(app, ov, "--loss-weight", "Text-head loss weight w",
                 [](RunConfig& c, double v) { c.train.loss_weight = v; });
  option<double>(app, ov, "--pos-weight", "BCE positive weight (default N_neg/N_pos)",
                 [](RunConfig& c, double v) { c.train.pos_weight = v; });
  option<double>(app, ov, "--dropout", "Dropout probability", [](RunConfig& c, double v) { c.train.dropout = v; });
  flag(app, ov, "--no-conflict", "Drop the conflict features", [](RunConfig& c) { c.train.conflict_features = false; });
  option<std::string>(app, ov, "--modalities", "Modality subset, e.g. vat or vt",
                      [](RunConfig& c, const std::string& v) { c.train.modalities = model::Modalities::parse(v); });
  option<std::size_t>(app, ov, "--model-dim", "Projection width (0 = input width)",
                      [](RunConfig& c, std::size_t v) { c.train.model_dim = v; });
  option<std::size_t>(app, ov, "--head-hidden", "Classifier hidden width",
                      [](RunConfig& c, std::size_t v) { c.train.head_hidden = v; });
  flag(app, ov, "--text-head-ffn", "Give the text head its own FFN block",
       [](RunConfig& c) { c.train.text_head_ffn = true; });
  option<double>(app, ov, "--val-alpha", "Blend weight for validation",
                 [](RunConfig& c, double v) { c.train.alpha = v; });
  option<std::string>(app, ov, "--sweep", "Validation sweep source: blend or full",
                      [](RunConfig& c, const std::string& v) {
                        if (v == "blend") c.train.sweep = train::SweepSource::blend;
                        else if (v == "full") c.train.sweep = train::SweepSource::full;
                        else throw ConfigError("--sweep: expected blend or full");
                      });
}

void inference_options(CLI::App* app, std::vector<Override>& ov, bool with_threshold) {
  option<std::vector<std::string>>(app, ov, "--checkpoint", "Checkpoint file; repeat to ensemble",
                                   [](RunConfig& c, const std::vector<std::string>& v) { c.eval.checkpoints = v; });
  option<double>(app, ov, "--alpha", "Text-head blend weight", [](RunConfig& c, double v) { c.eval.alpha = v; });
  option<std::size_t>(app, ov, "--n-windows", "Video windows per sample",
                      [](RunConfig& c, std::size_t v) { c.eval.n_windows = v; });
  option<std::string>(app, ov, "--split", "Manifest split to score",
                      [](RunConfig& c, const std::string& v) { c.eval.split = v; });
  if (with_threshold) {
    option<double>(app, ov, "--threshold", "Decision threshold", [](RunConfig& c, double v) { c.eval.threshold = v; });
  }
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

fs::path require_output(const RunConfig& c) {
  if (!c.output) throw ConfigError("no output directory; pass --out or set \"output\"");
  fs::create_directories(*c.output);
  return *c.output;
}

data::Dataset require_dataset(const RunConfig& c) {
  if (!c.manifest) throw ConfigError("no manifest; pass --manifest or set data.manifest");
  return data::Dataset::load(*c.manifest);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_resolved(const RunConfig& c, const std::string& command, const fs::path& dir) {
  write_text(dir / "resolved_config.json", resolved_json(c, command).dump(2) + "\n");
}

data::Split resolve_split(const RunConfig& c, data::Split fallback) {
  if (!c.eval.split) return fallback;
  auto s = data::parse_split(*c.eval.split);
  if (!s) throw ConfigError("unknown split \"" + *c.eval.split + "\"");
  return *s;
}

struct LoadedCheckpoints {
  std::vector<train::Checkpoint> checkpoints;
  std::vector<std::unique_ptr<eval::ModelScorer>> scorers;
  std::vector<const eval::Scorer*> view;
};

LoadedCheckpoints load_checkpoints(const RunConfig& c, std::size_t dim) {
  if (c.eval.checkpoints.empty()) throw ConfigError("no checkpoint; pass --checkpoint at least once");
  LoadedCheckpoints out;
  for (const auto& path : c.eval.checkpoints) {
    auto ckpt = train::load_checkpoint(path);
    if (ckpt.params.config.input_dim != dim) {
      throw DataError(path + ": checkpoint expects D=" + std::to_string(ckpt.params.config.input_dim) +
                      " but the dataset has D=" + std::to_string(dim));
    }
    out.scorers.push_back(std::make_unique<eval::ModelScorer>(ckpt.params, path));
    out.checkpoints.push_back(std::move(ckpt));
  }
  for (const auto& s : out.scorers) out.view.push_back(s.get());
  return out;
}

eval::InferenceConfig inference(const RunConfig& c) {
  if (c.eval.n_windows < 1) throw ConfigError("eval.n_windows must be >= 1");
  if (!(c.eval.alpha >= 0.0 && c.eval.alpha <= 1.0)) throw ConfigError("eval.alpha must lie in [0, 1]");
  return {c.eval.n_windows, c.eval.alpha, c.seed.value_or(0)};
}

eval::CalibrationResult calibrate_on(std::span<const data::Sample* const> split, const LoadedCheckpoints& ck,
                                     const eval::InferenceConfig& inf) {
  if (split.empty()) throw DataError("calibration split is empty");
  std::vector<int> labels;
  std::vector<double> probs;
  for (const auto& p : eval::predict(split, ck.view, inf)) {
    if (!p.label) throw DataError("sample " + p.id + " has no label; calibration needs a labelled split");
    labels.push_back(*p.label);
    probs.push_back(p.probability);
  }
  return eval::calibrate_threshold(labels, probs, inf.alpha);
}

int run_synth(RunConfig& c, std::ostream& out) {
  const auto dir = require_output(c);
  c.synth.validate();
  const auto ds = data::synth_generate(c.synth);
  const auto manifest = data::write_dataset(dir, ds.samples);
  write_resolved(c, "synth", dir);
  out << "wrote " << ds.samples.size() << " samples to " << manifest.string() << "\n";
  return kOk;
}

int run_train(RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto dir = require_output(c);
  c.train.validate();
  const auto ds = require_dataset(c);
  write_resolved(c, "train", dir);
  train::TrainOptions opts;
  opts.latest_checkpoint = dir / "latest.caahc";
  opts.on_epoch = [&err](const train::EpochRecord& r) {
    char line[160];
    std::snprintf(line, sizeof line, "epoch %3zu  loss %.5f  val_macro_f1 %.4f  tau %.2f  lr %.3g\n", r.epoch,
                  r.train_loss, r.val_macro_f1, r.threshold, r.lr);
    err << line << std::flush;
  };
  const auto result = train::train(ds, c.train, opts);
  train::save_checkpoint(dir / "checkpoint.caahc", result.best);
  train::write_history(dir / "history.jsonl", result.history);
  const json summary{{"best_epoch", result.best.epoch},
                     {"best_val_macro_f1", result.best.best_val_macro_f1},
                     {"threshold", result.best.threshold},
                     {"pos_weight", result.pos_weight},
                     {"epochs_run", result.history.size()},
                     {"parameter_count", result.parameter_count}};
  write_text(dir / "train_summary.json", summary.dump(2) + "\n");
  out << summary.dump() << "\n";
  return kOk;
}

int run_calibrate(RunConfig& c, std::ostream& out) {
  const auto dir = require_output(c);
  const auto ds = require_dataset(c);
  const auto inf = inference(c);
  const auto ck = load_checkpoints(c, ds.dim());
  write_resolved(c, "calibrate", dir);
  const auto split = resolve_split(c, data::Split::val);
  const auto result = calibrate_on(ds.split(split), ck, inf);
  const json j{{"split", data::to_string(split)},
               {"threshold", result.threshold},
               {"macro_f1", result.macro_f1},
               {"f1_ah", result.f1_ah},
               {"f1_noah", result.f1_noah},
               {"alpha", result.alpha},
               {"n_windows", inf.n_windows},
               {"ensemble_size", ck.view.size()},
               {"probabilities", result.probabilities}};
  write_text(dir / "calibration.json", j.dump(2) + "\n");
  out << "threshold " << result.threshold << "  macro_f1 " << result.macro_f1 << "\n";
  return kOk;
}

int run_evaluate(RunConfig& c, std::ostream& out) {
  const auto dir = require_output(c);
  const auto ds = require_dataset(c);
  const auto split = resolve_split(c, data::Split::test);
  if (!data::is_labelled(split)) {
    throw DataError("split " + std::string(data::to_string(split)) + " has no labels; use `caah predict` to score it");
  }
  const auto inf = inference(c);
  const auto ck = load_checkpoints(c, ds.dim());
  double threshold = 0.5;
  if (c.eval.threshold) {
    threshold = *c.eval.threshold;
  } else if (ck.checkpoints.size() == 1) {
    threshold = ck.checkpoints.front().threshold;
  } else {
    threshold = calibrate_on(ds.split(data::Split::val), ck, inf).threshold;
  }
  c.eval.threshold = threshold;
  write_resolved(c, "evaluate", dir);
  const auto resolved = resolved_json(c, "evaluate");
  const auto digest = config_digest(resolved);
  const auto report =
      eval::evaluate_split(ds.split(split), split, ck.view, inf, threshold, "evaluate-" + digest.substr(0, 8), digest);
  write_text(dir / "report.json", eval::to_json(report).dump(2) + "\n");
  out << eval::to_json(report, false).dump() << "\n";
  return kOk;
}

int run_predict(RunConfig& c, std::ostream& out) {
  const auto dir = require_output(c);
  const auto ds = require_dataset(c);
  const auto split = resolve_split(c, data::Split::test_unlabeled);
  const auto inf = inference(c);
  const auto ck = load_checkpoints(c, ds.dim());
  double threshold = 0.5;
  if (c.eval.threshold) {
    threshold = *c.eval.threshold;
  } else if (ck.checkpoints.size() == 1) {
    threshold = ck.checkpoints.front().threshold;
  } else {
    threshold = calibrate_on(ds.split(data::Split::val), ck, inf).threshold;
  }
  c.eval.threshold = threshold;
  write_resolved(c, "predict", dir);
  const auto samples = ds.split(split);
  std::string csv = "id,probability,label\n";
  char line[64];
  for (const auto& p : eval::predict(samples, ck.view, inf)) {
    std::snprintf(line, sizeof line, ",%.9f,%d\n", p.probability, eval::decide(p.probability, threshold));
    csv += p.id + line;
  }
  write_text(dir / "predictions.csv", csv);
  out << "wrote " << samples.size() << " predictions to " << (dir / "predictions.csv").string() << "\n";
  return kOk;
}

int run_ablate(RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto dir = require_output(c);
  c.train.validate();
  c.ablate.validate();
  const auto ds = require_dataset(c);
  write_resolved(c, "ablate", dir);
  std::ofstream jsonl(dir / "ablation.jsonl", std::ios::trunc);
  if (!jsonl) throw DataError("cannot write " + (dir / "ablation.jsonl").string());
  eval::AblationOptions opts;
  opts.log = [&err](const std::string& m) { err << m << "\n" << std::flush; };
  opts.on_row = [&jsonl](const eval::AblationRow& r) { jsonl << eval::to_json(r).dump() << "\n" << std::flush; };
  const auto rows = eval::ablate(ds, c.train, c.ablate, opts);
  const auto table = eval::render_table(rows);
  write_text(dir / "ablation.txt", table);
  out << table;
  return kOk;
}

int run_gradcheck(RunConfig& c, std::ostream& out) {
  const auto report = train::check_model_gradients(c.gradcheck);
  const json j{{"passed", report.passed},
               {"max_rel_error", report.max_rel_error},
               {"worst_entry", report.worst_entry},
               {"checked", report.checked},
               {"failure", report.failure}};
  if (c.output) {
    const auto dir = require_output(c);
    write_resolved(c, "gradcheck", dir);
    write_text(dir / "gradcheck.json", j.dump(2) + "\n");
  }
  out << (report.passed ? "PASS" : "FAIL") << "  max_rel_error " << report.max_rel_error << "  at "
      << report.worst_entry << "  (" << report.checked << " entries)";
  if (!report.failure.empty()) out << "  " << report.failure;
  out << "\n";
  return report.passed ? kOk : kNumerical;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conflict-aware multimodal A/H classifier over precomputed embeddings", "caah"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::string config;
    std::vector<Override> overrides;
  };
  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const char* name, const char* help) -> Command& {
    commands.push_back(std::make_unique<Command>());
    commands.back()->app = app.add_subcommand(name, help);
    return *commands.back();
  };

  auto& synth = add("synth", "Generate a synthetic conflict dataset");
  common_options(synth.app, synth.overrides, synth.config, false);
  {
    auto* a = synth.app;
    auto& ov = synth.overrides;
    option<std::size_t>(a, ov, "--n-per-class", "Samples per class",
                        [](RunConfig& c, std::size_t v) { c.synth.n_per_class = v; });
    option<std::size_t>(a, ov, "--dim", "Embedding width D", [](RunConfig& c, std::size_t v) { c.synth.dim = v; });
    option<std::size_t>(a, ov, "--video-len", "Video tokens per window",
                        [](RunConfig& c, std::size_t v) { c.synth.video_len = v; });
    option<std::size_t>(a, ov, "--audio-len", "Maximum audio tokens",
                        [](RunConfig& c, std::size_t v) { c.synth.audio_len = v; });
    option<std::size_t>(a, ov, "--text-len", "Text tokens", [](RunConfig& c, std::size_t v) { c.synth.text_len = v; });
    option<std::size_t>(a, ov, "--windows", "Video windows per sample",
                        [](RunConfig& c, std::size_t v) { c.synth.windows = v; });
    option<double>(a, ov, "--signal", "Signal strength c", [](RunConfig& c, double v) { c.synth.signal = v; });
    option<double>(a, ov, "--noise", "Noise sigma", [](RunConfig& c, double v) { c.synth.noise = v; });
    option<double>(a, ov, "--audio-signal", "Audio share of the video mean",
                   [](RunConfig& c, double v) { c.synth.audio_signal = v; });
    option<std::size_t>(a, ov, "--n-unlabeled", "Extra test_unlabeled samples",
                        [](RunConfig& c, std::size_t v) { c.synth.n_unlabeled = v; });
  }

  auto& trn = add("train", "Train a model and write checkpoint + history");
  common_options(trn.app, trn.overrides, trn.config, true);
  train_options(trn.app, trn.overrides);

  auto& cal = add("calibrate", "Sweep the decision threshold on a labelled split");
  common_options(cal.app, cal.overrides, cal.config, true);
  inference_options(cal.app, cal.overrides, false);

  auto& ev = add("evaluate", "Score a labelled split and write a metrics report");
  common_options(ev.app, ev.overrides, ev.config, true);
  inference_options(ev.app, ev.overrides, true);

  auto& pr = add("predict", "Write per-sample probabilities and labels as CSV");
  common_options(pr.app, pr.overrides, pr.config, true);
  inference_options(pr.app, pr.overrides, true);

  auto& abl = add("ablate", "Run the component / modality / window / ensemble ablation grid");
  common_options(abl.app, abl.overrides, abl.config, true);
  train_options(abl.app, abl.overrides);
  {
    auto* a = abl.app;
    auto& ov = abl.overrides;
    option<std::vector<std::string>>(a, ov, "--conflict-grid", "Conflict settings: on, off",
                                     [](RunConfig& c, const std::vector<std::string>& v) {
                                       c.ablate.conflict.clear();
                                       for (const auto& s : v) {
                                         if (s != "on" && s != "off") throw ConfigError("--conflict-grid: on or off");
                                         c.ablate.conflict.push_back(s == "on");
                                       }
                                     });
    option<std::vector<double>>(a, ov, "--alphas", "Blend weights",
                                [](RunConfig& c, const std::vector<double>& v) { c.ablate.alphas = v; });
    option<std::vector<std::string>>(a, ov, "--subsets", "Modality subsets",
                                     [](RunConfig& c, const std::vector<std::string>& v) {
                                       c.ablate.subsets.clear();
                                       for (const auto& s : v) c.ablate.subsets.push_back(model::Modalities::parse(s));
                                     });
    option<std::vector<std::size_t>>(a, ov, "--windows-grid", "Window counts",
                                     [](RunConfig& c, const std::vector<std::size_t>& v) { c.ablate.n_windows = v; });
    option<std::vector<std::size_t>>(a, ov, "--ensemble-grid", "Ensemble sizes (1, 2)",
                                     [](RunConfig& c, const std::vector<std::size_t>& v) {
                                       c.ablate.ensemble_sizes = v;
                                     });
  }

  auto& gc = add("gradcheck", "Compare model gradients with finite differences");
  common_options(gc.app, gc.overrides, gc.config, false);
  {
    auto* a = gc.app;
    auto& ov = gc.overrides;
    option<std::size_t>(a, ov, "--dim", "Embedding width", [](RunConfig& c, std::size_t v) { c.gradcheck.dim = v; });
    option<std::size_t>(a, ov, "--length", "Maximum sequence length",
                        [](RunConfig& c, std::size_t v) { c.gradcheck.max_length = v; });
    option<std::size_t>(a, ov, "--batch", "Batch size", [](RunConfig& c, std::size_t v) { c.gradcheck.batch = v; });
    option<std::size_t>(a, ov, "--head-hidden", "Classifier hidden width",
                        [](RunConfig& c, std::size_t v) { c.gradcheck.head_hidden = v; });
    flag(a, ov, "--no-conflict", "Drop the conflict features",
         [](RunConfig& c) { c.gradcheck.conflict_features = false; });
    flag(a, ov, "--text-head-ffn", "Give the text head its own FFN block",
         [](RunConfig& c) { c.gradcheck.text_head_ffn = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto& cmd : commands) {
      if (!cmd->app->parsed()) continue;
      const std::string name = cmd->app->get_name();
      RunConfig cfg = cmd->config.empty() ? RunConfig{} : load_run_config(cmd->config);
      if (cfg.command && *cfg.command != name) {
        throw ConfigError("config is for `" + *cfg.command + "`, not `" + name + "`");
      }
      for (const auto& o : cmd->overrides) o(cfg);
      if (!cfg.seed) {
        if (name == "synth") cfg.seed = cfg.synth.seed;
        else if (name == "train" || name == "ablate") cfg.seed = cfg.train.seed;
        else if (name == "gradcheck") cfg.seed = cfg.gradcheck.seed;
        else cfg.seed = 0;
      }
      cfg.apply_seed();
      if (cfg.manifest) cfg.manifest = absolute(*cfg.manifest);
      for (auto& p : cfg.eval.checkpoints) p = absolute(p);
      if (cfg.output) cfg.output = absolute(*cfg.output);

      if (name == "synth") return run_synth(cfg, out);
      if (name == "train") return run_train(cfg, out, err);
      if (name == "calibrate") return run_calibrate(cfg, out);
      if (name == "evaluate") return run_evaluate(cfg, out);
      if (name == "predict") return run_predict(cfg, out);
      if (name == "ablate") return run_ablate(cfg, out, err);
      if (name == "gradcheck") return run_gradcheck(cfg, out);
    }
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace caah::cli
