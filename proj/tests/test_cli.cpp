#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "caah/cli/cli.hpp"
#include "caah/data/bytes.hpp"

namespace fs = std::filesystem;
using caah::cli::cli_main;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "caah");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("caah_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::vector<std::string> kSmallSynth{"--n-per-class", "10", "--dim",     "6", "--video-len", "4",
                                           "--audio-len",   "4",  "--text-len", "4", "--n-unlabeled", "6"};
const std::vector<std::string> kSmallTrain{"--head-hidden", "16", "--max-epochs", "3", "--patience", "3", "--lr", "1e-3"};

fs::path make_data(const std::string& name) {
  const auto dir = scratch(name);
  auto args = std::vector<std::string>{"synth", "--out", dir.string()};
  args.insert(args.end(), kSmallSynth.begin(), kSmallSynth.end());
  const auto r = run(args);
  REQUIRE(r.code == 0);
  return dir;
}

fs::path train_into(const fs::path& data, const std::string& name) {
  const auto dir = scratch(name);
  auto args = std::vector<std::string>{"train", "--manifest", (data / "manifest.jsonl").string(), "--out", dir.string()};
  args.insert(args.end(), kSmallTrain.begin(), kSmallTrain.end());
  const auto r = run(args);
  INFO(r.err);
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_CASE("synth output is byte-identical across runs") {
  const auto a = make_data("synth_a");
  const auto b = make_data("synth_b");
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a / "emb")) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
  }
  CHECK(files > 0);
  CHECK(fs::exists(a / "resolved_config.json"));
}

TEST_CASE("train, calibrate, evaluate and predict") {
  const auto data = make_data("pipeline_data");
  const auto manifest = (data / "manifest.jsonl").string();
  const auto model = train_into(data, "pipeline_model");
  for (const char* f : {"checkpoint.caahc", "latest.caahc", "history.jsonl", "train_summary.json", "resolved_config.json"})
    CHECK(fs::exists(model / f));
  const auto ckpt = (model / "checkpoint.caahc").string();

  // Retraining from the resolved config reproduces the checkpoint.
  const auto again = scratch("pipeline_again");
  auto r = run({"train", "--config", (model / "resolved_config.json").string(), "--out", again.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(slurp(again / "checkpoint.caahc") == slurp(model / "checkpoint.caahc"));
  CHECK(slurp(again / "history.jsonl") == slurp(model / "history.jsonl"));

  const auto cal = scratch("pipeline_cal");
  r = run({"calibrate", "--manifest", manifest, "--checkpoint", ckpt, "--out", cal.string()});
  REQUIRE(r.code == 0);
  const auto cj = nlohmann::json::parse(slurp(cal / "calibration.json"));
  CHECK(cj["threshold"].get<double>() >= 0.25);
  CHECK(cj["threshold"].get<double>() <= 0.75);

  const auto ev = scratch("pipeline_eval");
  r = run({"evaluate", "--manifest", manifest, "--checkpoint", ckpt, "--checkpoint", ckpt, "--out", ev.string()});
  REQUIRE(r.code == 0);
  const auto rep = nlohmann::json::parse(slurp(ev / "report.json"));
  CHECK(rep["split"] == "test");
  CHECK(rep["trail"].size() == 2);  // 7/2/1 per class at 10 per class
  CHECK(rep["ensemble_size"] == 2);

  r = run({"evaluate", "--manifest", manifest, "--checkpoint", ckpt, "--split", "test_unlabeled", "--out", ev.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("predict") != std::string::npos);

  const auto pr = scratch("pipeline_pred");
  r = run({"predict", "--manifest", manifest, "--checkpoint", ckpt, "--out", pr.string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(pr / "predictions.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "id,probability,label");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const double p = std::stod(line.substr(a + 1, b - a - 1));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    const auto label = line.substr(b + 1);
    CHECK((label == "0" || label == "1"));
  }
  CHECK(rows == 6);
}

TEST_CASE("configuration and usage errors exit 1") {
  const auto dir = scratch("bad_config");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "c.json") << R"({"train": {"lr": 0.001, "learnign_rate": 2}})";
  }
  auto r = run({"train", "--config", (dir / "c.json").string(), "--manifest", "x.jsonl"});
  CHECK(r.code == 1);
  CHECK(r.err.find("learnign_rate") != std::string::npos);

  {
    std::ofstream(dir / "d.json") << R"({"command": "synth"})";
  }
  CHECK(run({"train", "--config", (dir / "d.json").string(), "--manifest", "x.jsonl"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"train", "--lr", "abc"}).code == 1);
  CHECK(run({"synth", "--n-per-class", "0"}).code == 1);
}

TEST_CASE("missing data exits 2") {
  const auto r = run({"train", "--manifest", "/nonexistent/manifest.jsonl", "--out", scratch("missing").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/manifest.jsonl") != std::string::npos);
}

TEST_CASE("gradcheck subcommand passes at defaults") {
  const auto r = run({"gradcheck"});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("PASS"));
}

TEST_CASE("installed binary reports usage") {
  const std::string bin = CAAH_CLI_PATH;
  int status = std::system((bin + " --help > /dev/null").c_str());
  CHECK(WEXITSTATUS(status) == 0);
  status = std::system((bin + " train --bogus > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(status) == 1);
}
