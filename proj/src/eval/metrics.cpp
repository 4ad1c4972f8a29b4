#include "caah/eval/metrics.hpp"

#include <stdexcept>

namespace caah::eval {

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace

F1Scores f1_scores(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.empty()) throw std::invalid_argument("f1_scores: empty input");
  if (labels.size() != predictions.size()) throw std::invalid_argument("f1_scores: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool y = labels[i] == 1, p = predictions[i] == 1;
    tp += y && p;
    fp += !y && p;
    fn += y && !p;
    tn += !y && !p;
  }
  F1Scores s;
  s.f1_ah = f1_from_counts(tp, fp, fn);
  s.f1_noah = f1_from_counts(tn, fn, fp);
  s.macro_f1 = (s.f1_ah + s.f1_noah) / 2.0;
  return s;
}

}  // namespace caah::eval
