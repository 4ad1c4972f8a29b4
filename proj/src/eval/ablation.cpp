#include "caah/eval/ablation.hpp"

#include <cstdio>
#include <sstream>

#include "caah/errors.hpp"
#include "caah/eval/calibration.hpp"
#include "caah/eval/report.hpp"
#include "caah/json_util.hpp"
#include "caah/train/trainer.hpp"

namespace caah::eval {

using nlohmann::json;

std::vector<model::Modalities> AblationGrid::all_subsets() {
  return {model::Modalities::parse("v"),  model::Modalities::parse("a"),  model::Modalities::parse("t"),
          model::Modalities::parse("va"), model::Modalities::parse("vt"), model::Modalities::parse("at"),
          model::Modalities::parse("vat")};
}

void AblationGrid::validate() const {
  if (conflict.empty() || alphas.empty() || subsets.empty() || n_windows.empty() || ensemble_sizes.empty()) {
    throw ConfigError("ablate: every grid axis needs at least one value");
  }
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("ablate: alpha outside [0, 1]");
  }
  for (auto n : n_windows) {
    if (n < 1) throw ConfigError("ablate: n_windows must be >= 1");
  }
  for (auto e : ensemble_sizes) {
    if (e != 1 && e != 2) throw ConfigError("ablate: ensemble sizes must be 1 or 2");
  }
}

json to_json(const AblationRow& r) {
  return json{{"run_id", r.run_id},
              {"config_digest", r.config_digest},
              {"split", "test"},
              {"conflict_features", r.conflict},
              {"modalities", r.modalities.to_string()},
              {"alpha", r.alpha},
              {"n_windows", r.n_windows},
              {"ensemble_size", r.ensemble_size},
              {"threshold", r.threshold},
              {"val_macro_f1", r.val_macro_f1},
              {"macro_f1", r.macro_f1},
              {"f1_ah", r.f1_ah},
              {"f1_noah", r.f1_noah}};
}

std::string render_table(std::span<const AblationRow> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-4s %5s %3s %4s %6s %8s %8s %8s %8s\n", "conflict", "mods", "alpha", "N",
                "ens", "tau", "val_F1", "F1_AH", "F1_NoAH", "Macro");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-8s %-4s %5.2f %3zu %4zu %6.2f %8.4f %8.4f %8.4f %8.4f\n",
                  r.conflict ? "on" : "off", r.modalities.to_string().c_str(), r.alpha, r.n_windows,
                  r.ensemble_size, r.threshold, r.val_macro_f1, r.f1_ah, r.f1_noah, r.macro_f1);
    out << line;
  }
  return out.str();
}

train::TrainConfig ensemble_partner(const train::TrainConfig& base) {
  auto cfg = base;
  cfg.label_smoothing = base.label_smoothing == 0.0 ? 0.1 : 0.0;
  cfg.seed = base.seed + 1;
  return cfg;
}

std::vector<AblationRow> ablate(const data::Dataset& dataset, const train::TrainConfig& base,
                                const AblationGrid& grid, const AblationOptions& options) {
  grid.validate();
  const auto tr = dataset.split(data::Split::train);
  const auto va = dataset.split(data::Split::val);
  const auto te = dataset.split(data::Split::test);
  if (te.empty()) throw DataError("ablate: test split is empty");

  bool need_partner = false;
  for (auto e : grid.ensemble_sizes) need_partner |= e == 2;

  std::vector<int> val_labels;
  for (const auto* s : va) {
    if (!s->label) throw DataError("ablate: validation sample " + s->id + " is unlabelled");
    val_labels.push_back(*s->label);
  }

  std::vector<AblationRow> rows;
  for (bool conflict : grid.conflict) {
    for (const auto& subset : grid.subsets) {
      auto cfg_a = base;
      cfg_a.conflict_features = conflict;
      cfg_a.modalities = subset;
      const std::string tag = std::string(conflict ? "on" : "off") + "-" + subset.to_string();

      if (options.log) options.log("training " + tag + " (checkpoint A)");
      const auto run_a = train::train(tr, va, cfg_a);
      const ModelScorer scorer_a(run_a.best.params, tag + "-A");
      std::optional<ModelScorer> scorer_b;
      if (need_partner) {
        if (options.log) options.log("training " + tag + " (checkpoint B)");
        const auto run_b = train::train(tr, va, ensemble_partner(cfg_a));
        scorer_b.emplace(run_b.best.params, tag + "-B");
      }

      for (auto ens : grid.ensemble_sizes) {
        std::vector<const Scorer*> scorers{&scorer_a};
        if (ens == 2) scorers.push_back(&*scorer_b);
        for (auto n : grid.n_windows) {
          for (double alpha : grid.alphas) {
            const InferenceConfig inference{n, alpha, base.seed};
            std::vector<double> val_probs;
            for (const auto& p : predict(va, scorers, inference)) val_probs.push_back(p.probability);
            const auto calib = calibrate_threshold(val_labels, val_probs, alpha);

            AblationRow row;
            row.conflict = conflict;
            row.modalities = subset;
            row.alpha = alpha;
            row.n_windows = n;
            row.ensemble_size = ens;
            row.config_digest = config_digest(json{{"train", train::to_json(cfg_a)},
                                                   {"alpha", alpha},
                                                   {"n_windows", n},
                                                   {"ensemble_size", ens}});
            char id[96];
            std::snprintf(id, sizeof id, "%s-a%.2f-n%zu-e%zu", tag.c_str(), alpha, n, ens);
            row.run_id = id;
            row.threshold = calib.threshold;
            row.val_macro_f1 = calib.macro_f1;
            const auto report =
                evaluate_split(te, data::Split::test, scorers, inference, calib.threshold, row.run_id, row.config_digest);
            row.macro_f1 = report.macro_f1;
            row.f1_ah = report.f1_ah;
            row.f1_noah = report.f1_noah;
            if (options.on_row) options.on_row(row);
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

}  // namespace caah::eval
