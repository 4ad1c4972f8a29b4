#pragma once

#include <array>
#include <span>
#include <vector>

namespace caah::eval {

// 0.25, 0.26, ..., 0.75 computed as (25 + k) / 100.
inline constexpr std::size_t kThresholdCount = 51;
std::array<double, kThresholdCount> threshold_grid();

// Hard label: probability >= threshold.
inline int decide(double probability, double threshold) { return probability >= threshold ? 1 : 0; }
std::vector<int> decide_all(std::span<const double> probabilities, double threshold);

struct CalibrationResult {
  double threshold = 0.5;
  double macro_f1 = 0.0;
  double f1_ah = 0.0;
  double f1_noah = 0.0;
  double alpha = 0.0;
  std::vector<double> probabilities;
};

// Exhaustive sweep over threshold_grid(); the first (smallest) threshold
// reaching the best Macro F1 wins.
CalibrationResult calibrate_threshold(std::span<const int> labels, std::span<const double> probabilities,
                                      double alpha = 0.0);

}  // namespace caah::eval
