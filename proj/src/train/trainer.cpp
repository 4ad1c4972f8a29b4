#include "caah/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "caah/errors.hpp"
#include "caah/eval/calibration.hpp"
#include "caah/eval/predict.hpp"
#include "caah/model/forward.hpp"
#include "caah/train/loss.hpp"

namespace caah::train {

using nlohmann::json;

json to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"train_loss", r.train_loss},
              {"val_macro_f1", r.val_macro_f1},
              {"threshold", r.threshold},
              {"lr", r.lr}};
}

void write_history(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write history " + path.string());
  for (const auto& r : history) out << to_json(r).dump() << '\n';
}

bool EarlyStopping::update(std::size_t epoch, double score) {
  if (!has_best_ || score > best_score_) {
    has_best_ = true;
    best_score_ = score;
    best_epoch_ = epoch;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

double default_pos_weight(std::span<const data::Sample* const> samples) {
  std::size_t pos = 0, neg = 0;
  for (const auto* s : samples) {
    if (!s->label) continue;
    (*s->label == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    throw DataError("cannot derive pos_weight: training split has " + std::to_string(pos) + " positives and " +
                    std::to_string(neg) + " negatives");
  }
  return static_cast<double>(neg) / static_cast<double>(pos);
}

Trainer::Trainer(const TrainConfig& config, model::ModelParams<float> params, double pos_weight)
    : config_(config), params_(std::move(params)), pos_weight_(pos_weight) {
  for (auto& [name, p] : params_.named()) handles_.push_back(p);
  state_.config = {config.beta1, config.beta2, config.adam_eps, config.weight_decay};
}

double Trainer::accumulate(const data::Batch& batch, double loss_scale, nn::Rng* dropout_rng) {
  std::vector<float> targets;
  targets.reserve(batch.size());
  for (const auto& y : batch.labels) {
    if (!y) throw DataError("training batch contains an unlabelled sample");
    targets.push_back(static_cast<float>(smooth_label(*y, config_.label_smoothing)));
  }
  nn::Graph<float> g;
  const auto mode = dropout_rng ? model::Mode::train : model::Mode::eval;
  const auto r = model::forward(g, params_, batch, mode, dropout_rng);
  const auto loss = joint_loss<float>(r.logit_full, r.logit_text, targets, config_.loss_weight, pos_weight_);
  const double value = loss.value().item();
  if (std::isfinite(value)) g.backward(loss, static_cast<float>(loss_scale));
  return value;
}

void Trainer::step(double lr) {
  nn::adamw_step<float>(handles_, state_, lr);
  for (std::size_t i = 0; i < handles_.size(); ++i) {
    for (float v : handles_[i]->value.values()) {
      if (!std::isfinite(v)) {
        throw NumericalError("parameter " + params_.named()[i].first + " became non-finite at optimiser step " +
                             std::to_string(state_.step));
      }
    }
    handles_[i]->zero_grad();
  }
}

TrainResult train(std::span<const data::Sample* const> train_split, std::span<const data::Sample* const> val_split,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (train_split.empty()) throw DataError("train: training split is empty");
  if (val_split.empty()) throw DataError("train: validation split is empty");
  for (const auto* s : val_split) {
    if (!s->label) throw DataError("train: validation sample " + s->id + " is unlabelled");
  }

  TrainResult result;
  result.pos_weight = config.pos_weight.value_or(default_pos_weight(train_split));
  const auto model_cfg = config.model_config(train_split.front()->dim());
  Trainer trainer(config, model::init_model(model_cfg, config.seed), result.pos_weight);
  result.parameter_count = trainer.params().parameter_count();

  const std::size_t n = train_split.size();
  const std::size_t n_batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t steps_per_epoch = (n_batches + config.accum_steps - 1) / config.accum_steps;
  const std::uint64_t total_steps = static_cast<std::uint64_t>(config.max_epochs) * steps_per_epoch;

  nn::Rng shuffle_rng(nn::derive_seed(config.seed, "shuffle"));
  nn::Rng window_rng(nn::derive_seed(config.seed, "window"));
  nn::Rng dropout_rng(nn::derive_seed(config.seed, "dropout"));

  std::vector<int> val_labels;
  for (const auto* s : val_split) val_labels.push_back(*s->label);
  const eval::InferenceConfig val_inference{eval::kAllWindows,
                                            config.sweep == SweepSource::blend ? config.alpha : 0.0, config.seed};

  EarlyStopping stopper(config.patience);
  std::uint64_t global_step = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    double last_lr = 0.0;
    for (std::size_t group = 0; group < n_batches; group += config.accum_steps) {
      const std::size_t group_end = std::min(n_batches, group + config.accum_steps);
      const double scale = 1.0 / static_cast<double>(group_end - group);
      for (std::size_t b = group; b < group_end; ++b) {
        std::vector<const data::Sample*> samples;
        std::vector<std::size_t> windows;
        for (std::size_t i = b * config.batch_size; i < std::min(n, (b + 1) * config.batch_size); ++i) {
          const auto* s = train_split[order[i]];
          samples.push_back(s);
          windows.push_back(static_cast<std::size_t>(window_rng.below(s->video_windows.size())));
        }
        const double loss = trainer.accumulate(data::make_batch(samples, windows), scale, &dropout_rng);
        if (!std::isfinite(loss)) {
          throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(b + 1));
        }
        loss_sum += loss;
      }
      last_lr = nn::cosine_lr(global_step, total_steps, config.lr, config.min_lr);
      trainer.step(last_lr);
      ++global_step;
    }

    const eval::ModelScorer scorer(trainer.params(), "epoch" + std::to_string(epoch));
    const eval::Scorer* scorers[] = {&scorer};
    std::vector<double> probs;
    for (const auto& p : eval::predict(val_split, scorers, val_inference)) probs.push_back(p.probability);
    const auto calib = eval::calibrate_threshold(val_labels, probs, val_inference.alpha);

    EpochRecord record{epoch, loss_sum / static_cast<double>(n_batches), calib.macro_f1, calib.threshold, last_lr};
    result.history.push_back(record);
    if (options.on_epoch) options.on_epoch(record);

    Checkpoint current{trainer.params(), config, calib.threshold, calib.macro_f1, epoch, result.pos_weight};
    if (options.latest_checkpoint) save_checkpoint(*options.latest_checkpoint, current);
    if (stopper.update(epoch, calib.macro_f1)) result.best = std::move(current);
    if (stopper.should_stop()) break;
  }
  return result;
}

TrainResult train(const data::Dataset& dataset, const TrainConfig& config, const TrainOptions& options) {
  const auto tr = dataset.split(data::Split::train);
  const auto va = dataset.split(data::Split::val);
  return train(tr, va, config, options);
}

}  // namespace caah::train
