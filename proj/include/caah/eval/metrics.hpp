#pragma once

#include <span>

namespace caah::eval {

struct F1Scores {
  double f1_ah = 0.0;    // positive class (label 1)
  double f1_noah = 0.0;  // negative class (label 0)
  double macro_f1 = 0.0;
};

// Per-class F1 = 2 tp / (2 tp + fp + fn), 0 when the denominator is 0.
// Throws std::invalid_argument on empty or mismatched input.
F1Scores f1_scores(std::span<const int> labels, std::span<const int> predictions);

}  // namespace caah::eval
