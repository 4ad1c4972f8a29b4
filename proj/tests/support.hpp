#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "caah/data/dataset.hpp"
#include "caah/eval/predict.hpp"
#include "caah/nn/graph.hpp"
#include "caah/nn/ops.hpp"
#include "caah/nn/rng.hpp"

namespace caah::testing {

template <typename T = double>
nn::Tensor<T> random_tensor(const nn::Shape& shape, nn::Rng& rng, double scale = 1.0) {
  nn::Tensor<T> t(shape);
  for (auto& v : t.storage()) v = static_cast<T>(scale * rng.normal());
  return t;
}

// sum(x * w) for a fixed random w, so every output entry gets a distinct
// upstream gradient.
template <typename T>
nn::Expr<T> random_projection(nn::Graph<T>& g, nn::Expr<T> x, std::uint64_t seed) {
  nn::Rng rng(seed);
  auto w = g.constant(random_tensor<T>(x.shape(), rng));
  return nn::sum(nn::mul(x, w));
}

inline data::EmbeddingSequence sequence(std::size_t length, std::size_t dim, std::size_t valid, nn::Rng& rng) {
  data::EmbeddingSequence s;
  s.length = static_cast<std::uint32_t>(length);
  s.dim = static_cast<std::uint32_t>(dim);
  s.valid_count = static_cast<std::uint32_t>(valid);
  s.tokens.assign(length * dim, 0.0f);
  for (std::size_t i = 0; i < valid * dim; ++i) s.tokens[i] = static_cast<float>(rng.normal());
  return s;
}

// Returns fixed logits per (sample id, window).
class StubScorer final : public eval::Scorer {
 public:
  explicit StubScorer(std::string id) : id_(std::move(id)) {}
  void set(const std::string& sample, std::size_t window, eval::BranchLogits logits) {
    table_[{sample, window}] = logits;
  }
  std::vector<eval::BranchLogits> score(std::span<const eval::WindowRef> items) const override {
    std::vector<eval::BranchLogits> out;
    for (const auto& it : items) {
      auto found = table_.find({it.sample->id, it.window});
      out.push_back(found == table_.end() ? eval::BranchLogits{} : found->second);
    }
    return out;
  }
  std::string id() const override { return id_; }

 private:
  std::string id_;
  std::map<std::pair<std::string, std::size_t>, eval::BranchLogits> table_;
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Independent F1 from explicit confusion counting.
struct OracleF1 {
  double ah = 0.0, noah = 0.0, macro = 0.0;
};

inline OracleF1 oracle_f1(const std::vector<int>& labels, const std::vector<int>& preds) {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1 && preds[i] == 1) ++tp;
    if (labels[i] == 0 && preds[i] == 0) ++tn;
    if (labels[i] == 0 && preds[i] == 1) ++fp;
    if (labels[i] == 1 && preds[i] == 0) ++fn;
  }
  auto f1 = [](long t, long a, long b) {
    const long denom = 2 * t + a + b;
    return denom == 0 ? 0.0 : double(2 * t) / double(denom);
  };
  OracleF1 r;
  r.ah = f1(tp, fp, fn);
  r.noah = f1(tn, fn, fp);
  r.macro = (r.ah + r.noah) / 2.0;
  return r;
}

struct OracleCalibration {
  double threshold = 0.0;
  double macro = -1.0;
};

// Walks the grid from 0.75 down to 0.25 and keeps any score >= the best, so
// the smallest threshold wins ties.
inline OracleCalibration oracle_calibration(const std::vector<int>& labels, const std::vector<double>& probs) {
  OracleCalibration best;
  for (int k = 50; k >= 0; --k) {
    const double tau = (25.0 + k) / 100.0;
    std::vector<int> preds;
    for (double p : probs) preds.push_back(p >= tau ? 1 : 0);
    const double m = oracle_f1(labels, preds).macro;
    if (m >= best.macro) best = {tau, m};
  }
  return best;
}

}  // namespace caah::testing
