#include "caah/eval/calibration.hpp"

#include <stdexcept>
#include <string>

#include "caah/eval/metrics.hpp"

namespace caah::eval {

std::array<double, kThresholdCount> threshold_grid() {
  std::array<double, kThresholdCount> grid{};
  for (std::size_t k = 0; k < kThresholdCount; ++k) grid[k] = static_cast<double>(25 + k) / 100.0;
  return grid;
}

std::vector<int> decide_all(std::span<const double> probabilities, double threshold) {
  std::vector<int> out;
  out.reserve(probabilities.size());
  for (double p : probabilities) out.push_back(decide(p, threshold));
  return out;
}

CalibrationResult calibrate_threshold(std::span<const int> labels, std::span<const double> probabilities,
                                      double alpha) {
  if (labels.empty()) throw std::invalid_argument("calibrate_threshold: empty input");
  if (labels.size() != probabilities.size()) throw std::invalid_argument("calibrate_threshold: length mismatch");
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("calibrate_threshold: probability outside [0, 1]");
  }
  CalibrationResult best;
  best.macro_f1 = -1.0;
  for (double tau : threshold_grid()) {
    const auto scores = f1_scores(labels, decide_all(probabilities, tau));
    if (scores.macro_f1 > best.macro_f1) {
      best.threshold = tau;
      best.macro_f1 = scores.macro_f1;
      best.f1_ah = scores.f1_ah;
      best.f1_noah = scores.f1_noah;
    }
  }
  best.alpha = alpha;
  best.probabilities.assign(probabilities.begin(), probabilities.end());
  return best;
}

}  // namespace caah::eval
