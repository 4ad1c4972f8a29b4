#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "caah/data/batch.hpp"
#include "caah/data/dataset.hpp"
#include "caah/nn/optim.hpp"
#include "caah/nn/rng.hpp"
#include "caah/train/checkpoint.hpp"

namespace caah::train {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double threshold = 0.5;
  double lr = 0.0;
};

nlohmann::json to_json(const EpochRecord& r);
// One JSON object per line: epoch, train_loss, val_macro_f1, threshold, lr.
void write_history(const std::filesystem::path& path, std::span<const EpochRecord> history);

// Tracks the best score; stops after `patience` epochs without strict
// improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `score` improves on every earlier epoch.
  bool update(std::size_t epoch, double score);
  bool should_stop() const { return epochs_since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_score_ = 0.0;
  bool has_best_ = false;
  std::size_t epochs_since_best_ = 0;
};

// N_neg / N_pos over the labelled samples.
double default_pos_weight(std::span<const data::Sample* const> samples);

// Owns the parameters and optimiser state for one run. Gradients accumulate
// across accumulate() calls until step().
class Trainer {
 public:
  Trainer(const TrainConfig& config, model::ModelParams<float> params, double pos_weight);

  // Forward and backward on one labelled mini-batch. Gradients are scaled by
  // loss_scale before accumulating; the unscaled mean loss is returned.
  double accumulate(const data::Batch& batch, double loss_scale, nn::Rng* dropout_rng);

  // One AdamW update at `lr`, then clears gradients. Throws NumericalError if
  // any parameter becomes non-finite.
  void step(double lr);

  model::ModelParams<float>& params() { return params_; }
  const model::ModelParams<float>& params() const { return params_; }
  const nn::OptimState<float>& optimizer() const { return state_; }
  double pos_weight() const { return pos_weight_; }

 private:
  TrainConfig config_;
  model::ModelParams<float> params_;
  std::vector<nn::Parameter<float>*> handles_;
  nn::OptimState<float> state_;
  double pos_weight_;
};

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
  // When set, the latest epoch's checkpoint is written here every epoch.
  std::optional<std::filesystem::path> latest_checkpoint;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochRecord> history;
  double pos_weight = 1.0;
  std::size_t parameter_count = 0;
};

// Shuffled mini-batches with a random video window per sample, gradient
// accumulation, cosine-scheduled AdamW, per-epoch validation with threshold
// sweep, early stopping on validation Macro F1.
TrainResult train(std::span<const data::Sample* const> train_split, std::span<const data::Sample* const> val_split,
                  const TrainConfig& config, const TrainOptions& options = {});

TrainResult train(const data::Dataset& dataset, const TrainConfig& config, const TrainOptions& options = {});

}  // namespace caah::train
