#include "caah/eval/report.hpp"

#include <algorithm>

#include "caah/errors.hpp"
#include "caah/eval/calibration.hpp"

namespace caah::eval {

using nlohmann::json;

json to_json(const EvalReport& r, bool include_trail) {
  json j{{"run_id", r.run_id},
         {"config_digest", r.config_digest},
         {"split", data::to_string(r.split)},
         {"macro_f1", r.macro_f1},
         {"f1_ah", r.f1_ah},
         {"f1_noah", r.f1_noah},
         {"threshold", r.threshold},
         {"alpha", r.alpha},
         {"n_windows", r.n_windows},
         {"ensemble_size", r.ensemble_size},
         {"checkpoint_ids", r.checkpoint_ids}};
  if (include_trail) {
    json trail = json::array();
    for (const auto& a : r.trail) {
      trail.push_back({{"id", a.id},
                       {"label", a.label},
                       {"probability", a.probability},
                       {"prediction", a.prediction},
                       {"conflict_vt_norm", a.conflict_vt_norm}});
    }
    j["trail"] = std::move(trail);
  }
  return j;
}

F1Scores rescore(const EvalReport& report) {
  std::vector<int> labels, preds;
  for (const auto& a : report.trail) {
    labels.push_back(a.label);
    preds.push_back(decide(a.probability, report.threshold));
  }
  return f1_scores(labels, preds);
}

ConflictNormSummary conflict_norm_summary(std::span<const AuditRow> trail) {
  ConflictNormSummary s;
  double tp = 0.0, tn = 0.0;
  for (const auto& a : trail) {
    if (a.label != a.prediction) continue;
    if (a.label == 1) {
      tp += a.conflict_vt_norm;
      ++s.true_positives;
    } else {
      tn += a.conflict_vt_norm;
      ++s.true_negatives;
    }
  }
  if (s.true_positives) s.true_positive_mean = tp / static_cast<double>(s.true_positives);
  if (s.true_negatives) s.true_negative_mean = tn / static_cast<double>(s.true_negatives);
  return s;
}

EvalReport evaluate_split(std::span<const data::Sample* const> samples, data::Split split,
                          std::span<const Scorer* const> scorers, const InferenceConfig& inference,
                          double threshold, std::string run_id, std::string config_digest) {
  if (!data::is_labelled(split)) {
    throw DataError("split " + std::string(data::to_string(split)) + " has no labels; use `predict` to score it");
  }
  if (samples.empty()) throw DataError("split " + std::string(data::to_string(split)) + " is empty");
  for (const auto* s : samples) {
    if (!s->label) throw DataError("sample " + s->id + " has no label; use `predict` to score it");
  }

  EvalReport r;
  r.run_id = std::move(run_id);
  r.config_digest = std::move(config_digest);
  r.split = split;
  r.threshold = threshold;
  r.alpha = inference.alpha;
  r.n_windows = inference.n_windows;
  r.ensemble_size = scorers.size();
  for (const auto* s : scorers) r.checkpoint_ids.push_back(s->id());
  std::sort(r.checkpoint_ids.begin(), r.checkpoint_ids.end());

  for (const auto& p : predict(samples, scorers, inference)) {
    r.trail.push_back({p.id, *p.label, p.probability, decide(p.probability, threshold), p.conflict_vt_norm});
  }
  const auto f1 = rescore(r);
  r.macro_f1 = f1.macro_f1;
  r.f1_ah = f1.f1_ah;
  r.f1_noah = f1.f1_noah;
  return r;
}

}  // namespace caah::eval
