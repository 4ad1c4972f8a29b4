#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "caah/data/dataset.hpp"
#include "caah/model/config.hpp"
#include "caah/train/config.hpp"

namespace caah::eval {

struct AblationGrid {
  std::vector<bool> conflict{true, false};
  std::vector<double> alphas{0.0, 0.5, 0.6, 1.0};
  std::vector<model::Modalities> subsets = all_subsets();
  std::vector<std::size_t> n_windows{1, 3, 5};
  std::vector<std::size_t> ensemble_sizes{1, 2};

  // v, a, t, va, vt, at, vat
  static std::vector<model::Modalities> all_subsets();
  void validate() const;
};

struct AblationRow {
  std::string run_id;
  std::string config_digest;
  bool conflict = true;
  model::Modalities modalities;
  double alpha = 0.0;
  std::size_t n_windows = 1;
  std::size_t ensemble_size = 1;
  // Calibrated on val with the same inference settings.
  double threshold = 0.5;
  double val_macro_f1 = 0.0;
  // Test split at that threshold.
  double macro_f1 = 0.0;
  double f1_ah = 0.0;
  double f1_noah = 0.0;
};

nlohmann::json to_json(const AblationRow& row);
std::string render_table(std::span<const AblationRow> rows);

struct AblationOptions {
  std::function<void(const std::string&)> log;
  std::function<void(const AblationRow&)> on_row;
};

// One training run per (conflict, subset) and checkpoint; alpha, window count
// and ensembling are inference-only and reuse those models. The second
// ensemble member flips label smoothing between 0 and 0.1 and uses seed + 1.
std::vector<AblationRow> ablate(const data::Dataset& dataset, const train::TrainConfig& base,
                                const AblationGrid& grid = {}, const AblationOptions& options = {});

// Configuration of the second ensemble member.
train::TrainConfig ensemble_partner(const train::TrainConfig& base);

}  // namespace caah::eval
