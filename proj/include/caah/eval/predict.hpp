#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caah/data/dataset.hpp"
#include "caah/model/params.hpp"

namespace caah::eval {

struct WindowRef {
  const data::Sample* sample = nullptr;
  std::size_t window = 0;
};

struct BranchLogits {
  double text = 0.0;
  double full = 0.0;
  double conflict_vt_norm = 0.0;  // ||v - t|| of the pooled embeddings
};

// Produces both branch logits for (sample, window) pairs. A trained model is
// one implementation; tests substitute stubs.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<BranchLogits> score(std::span<const WindowRef> items) const = 0;
  virtual std::string id() const = 0;
};

class ModelScorer final : public Scorer {
 public:
  explicit ModelScorer(model::ModelParams<float> params, std::string id = "model", std::size_t chunk = 32);

  std::vector<BranchLogits> score(std::span<const WindowRef> items) const override;
  std::string id() const override { return id_; }
  const model::ModelParams<float>& params() const { return params_; }

 private:
  // forward() binds parameters by reference; inference graphs never write them.
  mutable model::ModelParams<float> params_;
  std::string id_;
  std::size_t chunk_;
};

inline constexpr std::size_t kAllWindows = std::numeric_limits<std::size_t>::max();

struct InferenceConfig {
  std::size_t n_windows = 5;
  double alpha = 0.6;
  std::uint64_t seed = 0;
};

// min(n, available) distinct window indices, sorted. Sampling without
// replacement is seeded by (seed, sample id), so it does not depend on which
// other samples are evaluated alongside.
std::vector<std::size_t> choose_windows(const data::Sample& sample, std::size_t n, std::uint64_t seed);

struct SamplePrediction {
  std::string id;
  std::optional<int> label;
  double probability = 0.0;
  double conflict_vt_norm = 0.0;
  std::size_t windows_used = 0;
};

// Per scorer: blended probability averaged over the chosen windows; then
// averaged over scorers. Terms are summed in sorted order, so the result does
// not depend on scorer or window order.
std::vector<SamplePrediction> predict(std::span<const data::Sample* const> samples,
                                      std::span<const Scorer* const> scorers, const InferenceConfig& config);

double predict_sample(const data::Sample& sample, std::span<const Scorer* const> scorers,
                      const InferenceConfig& config);

}  // namespace caah::eval
