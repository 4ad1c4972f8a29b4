#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caah/data/manifest.hpp"
#include "caah/eval/metrics.hpp"
#include "caah/eval/predict.hpp"

namespace caah::eval {

struct AuditRow {
  std::string id;
  int label = 0;
  double probability = 0.0;
  int prediction = 0;
  double conflict_vt_norm = 0.0;
};

struct EvalReport {
  std::string run_id;
  std::string config_digest;
  data::Split split = data::Split::test;
  double macro_f1 = 0.0;
  double f1_ah = 0.0;
  double f1_noah = 0.0;
  double threshold = 0.5;
  double alpha = 0.6;
  std::size_t n_windows = 5;
  std::size_t ensemble_size = 1;
  std::vector<std::string> checkpoint_ids;
  std::vector<AuditRow> trail;
};

nlohmann::json to_json(const EvalReport& report, bool include_trail = true);

// Recomputes F1 from the trail's probabilities at the report threshold.
F1Scores rescore(const EvalReport& report);

// Mean ||v - t|| of true positives and true negatives (label == prediction).
struct ConflictNormSummary {
  double true_positive_mean = 0.0;
  double true_negative_mean = 0.0;
  std::size_t true_positives = 0;
  std::size_t true_negatives = 0;
};
ConflictNormSummary conflict_norm_summary(std::span<const AuditRow> trail);

// Scores a labelled split at a fixed threshold. Throws DataError for
// test_unlabeled or any unlabelled sample.
EvalReport evaluate_split(std::span<const data::Sample* const> samples, data::Split split,
                          std::span<const Scorer* const> scorers, const InferenceConfig& inference,
                          double threshold, std::string run_id = "eval", std::string config_digest = "");

}  // namespace caah::eval
