#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "caah/data/synth.hpp"
#include "caah/eval/ablation.hpp"
#include "caah/train/config.hpp"
#include "caah/train/model_grad_check.hpp"

namespace caah::cli {

struct EvalBlock {
  double alpha = 0.6;
  std::size_t n_windows = 5;
  std::vector<std::string> checkpoints;
  std::optional<double> threshold;
  // Unset: val for calibrate, test for evaluate, test_unlabeled for predict.
  std::optional<std::string> split;
};

// Everything a subcommand reads. Blocks a command does not use are ignored
// but still parsed strictly.
struct RunConfig {
  std::optional<std::string> command;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> manifest;
  data::SynthConfig synth;
  train::TrainConfig train;
  EvalBlock eval;
  eval::AblationGrid ablate;
  train::ModelGradCheckSetup gradcheck;

  // Pushes the master seed into every seeded block.
  void apply_seed();
};

// Top-level keys: command, seed, output, data {manifest}, synth, train, eval,
// ablate, gradcheck. Unknown keys at any level raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// The resolved configuration for `command`: only the blocks it reads, with
// every field filled in.
nlohmann::json resolved_json(const RunConfig& cfg, const std::string& command);

nlohmann::json to_json(const data::SynthConfig& cfg);
data::SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace caah::cli
