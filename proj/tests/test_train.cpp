#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "caah/data/batch.hpp"
#include "caah/data/bytes.hpp"
#include "caah/data/synth.hpp"
#include "caah/errors.hpp"
#include "caah/model/forward.hpp"
#include "caah/train/checkpoint.hpp"
#include "caah/train/loss.hpp"
#include "caah/train/model_grad_check.hpp"
#include "caah/train/trainer.hpp"
#include "support.hpp"

using namespace caah;
using namespace caah::train;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.head_hidden = 16;
  c.max_epochs = 4;
  c.patience = 4;
  c.lr = 1e-3;
  return c;
}

data::SynthDataset tiny_synth(std::size_t per_class = 10) {
  data::SynthConfig s;
  s.n_per_class = per_class;
  s.dim = 6;
  s.video_len = s.audio_len = s.text_len = 4;
  s.windows = 3;
  return data::synth_generate(s);
}

std::vector<const data::Sample*> pick(const std::vector<data::Sample>& all, data::Split split) {
  std::vector<const data::Sample*> out;
  for (const auto& s : all)
    if (s.split == split) out.push_back(&s);
  return out;
}

double direct_bce(double l, double y, double pw) {
  const double s = 1.0 / (1.0 + std::exp(-l));
  return -(pw * y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
}

}  // namespace

TEST_CASE("label smoothing") {
  CHECK(std::abs(smooth_label(1, 0.1) - 0.95) < 1e-12);
  CHECK(std::abs(smooth_label(0, 0.1) - 0.05) < 1e-12);
  CHECK(smooth_label(1, 0.0) == 1.0);
  CHECK(smooth_label(0, 0.0) == 0.0);
}

TEST_CASE("joint loss examples") {
  nn::Graph<double> g;
  const std::vector<double> one{1.0};
  auto zero = g.constant(nn::Tensor<double>({1, 1}, 0.0));
  CHECK(joint_loss<double>(zero, zero, one, 0.5, 1.0).value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // Two samples, eps = 0.1, pos_weight 0.96.
  const std::vector<double> lf{1.3, -0.4}, lt{-0.2, 2.1};
  const std::vector<int> y{1, 0};
  std::vector<double> targets;
  for (int v : y) targets.push_back(smooth_label(v, 0.1));
  auto full = g.constant(nn::Tensor<double>({2, 1}, lf));
  auto text = g.constant(nn::Tensor<double>({2, 1}, lt));
  const double got = joint_loss<double>(full, text, targets, 0.5, 0.96).value().item();
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double yt = y[i] * 0.9 + 0.05;
    expected += 0.5 * direct_bce(lf[i], yt, 0.96) / 2.0 + 0.5 * direct_bce(lt[i], yt, 0.96) / 2.0;
  }
  CHECK(std::abs(got - expected) < 1e-7);
}

TEST_CASE("joint loss is non-negative and vanishes for confident correct predictions") {
  nn::Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    nn::Graph<double> g;
    auto a = g.constant(testing::random_tensor({3, 1}, rng, 10.0));
    auto b = g.constant(testing::random_tensor({3, 1}, rng, 10.0));
    const std::vector<double> t{rng.uniform(), rng.uniform(), rng.uniform()};
    CHECK(joint_loss<double>(a, b, t, rng.uniform(), rng.uniform(0.1, 3.0)).value().item() >= 0.0);
  }
  nn::Graph<double> g;
  auto sure = g.constant(nn::Tensor<double>({2, 1}, {40.0, -40.0}));
  const std::vector<double> t{1.0, 0.0};
  CHECK(joint_loss<double>(sure, sure, t, 0.5, 1.0).value().item() < 1e-12);
}

TEST_CASE("loss weight 1 leaves fusion-only parameters without gradient") {
  model::ModelConfig cfg;
  cfg.input_dim = cfg.model_dim = 6;
  cfg.head_hidden = 8;
  cfg.dropout = 0.0;
  auto params = model::init_model(cfg, 2);
  const auto samples = random_samples(3, 6, 4, 1, 3);
  std::vector<const data::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const std::vector<std::size_t> w(3, 0);
  const auto batch = data::make_batch(ptrs, w);
  nn::Graph<float> g;
  const auto r = model::forward(g, params, batch, model::Mode::eval);
  const std::vector<float> targets{1.0f, 0.0f, 1.0f};
  g.backward(joint_loss<float>(r.logit_full, r.logit_text, targets, 1.0, 1.0));
  bool text_moved = false;
  for (const auto& [name, p] : params.named()) {
    const bool fusion_only = name.starts_with("fusion.") || name.starts_with("head_full.") ||
                             name.starts_with("proj_video") || name.starts_with("proj_audio") ||
                             name.starts_with("query_video") || name.starts_with("query_audio");
    if (fusion_only) {
      for (float v : p->grad.values()) CHECK(v == 0.0f);
    }
    if (name.starts_with("head_text.")) {
      for (float v : p->grad.values()) text_moved |= v != 0.0f;
    }
  }
  CHECK(text_moved);
}

TEST_CASE("early stopping arithmetic") {
  EarlyStopping stop(15);
  std::size_t last = 0;
  for (std::size_t epoch = 1; epoch <= 60; ++epoch) {
    const double score = epoch <= 3 ? 0.5 + 0.1 * epoch : 0.8 - 0.01 * epoch;
    stop.update(epoch, score);
    last = epoch;
    if (stop.should_stop()) break;
  }
  CHECK(last == 18);
  CHECK(stop.best_epoch() == 3);
  CHECK(stop.best_score() == doctest::Approx(0.8));

  // Ties do not count as improvement.
  EarlyStopping tie(2);
  CHECK(tie.update(1, 0.7));
  CHECK_FALSE(tie.update(2, 0.7));
  CHECK_FALSE(tie.update(3, 0.7));
  CHECK(tie.should_stop());
  CHECK(tie.best_epoch() == 1);
}

TEST_CASE("early stopping never keeps a worse epoch") {
  nn::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    EarlyStopping stop(1 + rng.below(10));
    double best_seen = -1.0;
    for (std::size_t e = 1; e <= 60 && !stop.should_stop(); ++e) {
      const double s = std::round(rng.uniform() * 20.0) / 20.0;
      stop.update(e, s);
      best_seen = std::max(best_seen, s);
      CHECK(stop.best_score() == best_seen);
    }
  }
}

TEST_CASE("default pos_weight is N_neg / N_pos") {
  const auto ds = tiny_synth(10);
  auto tr = pick(ds.samples, data::Split::train);
  CHECK(default_pos_weight(tr) == 1.0);
  tr.pop_back();  // last sample is a positive
  CHECK(default_pos_weight(tr) == doctest::Approx(7.0 / 6.0));
  std::vector<const data::Sample*> only_pos;
  for (const auto* s : tr)
    if (*s->label == 1) only_pos.push_back(s);
  CHECK_THROWS_AS(default_pos_weight(only_pos), DataError);
}

TEST_CASE("accumulated step over 4 x batch-4 equals one batch-16 step") {
  const auto samples = random_samples(16, 6, 5, 1, 11);
  std::vector<const data::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  auto cfg = tiny_config();
  cfg.dropout = 0.0;
  const auto init = model::init_model(cfg.model_config(6), 3);

  Trainer accumulated(cfg, init, 1.0);
  for (std::size_t b = 0; b < 4; ++b) {
    std::span<const data::Sample* const> chunk(ptrs.data() + 4 * b, 4);
    const std::vector<std::size_t> w(4, 0);
    accumulated.accumulate(data::make_batch(chunk, w), 0.25, nullptr);
  }
  Trainer whole(cfg, init, 1.0);
  const std::vector<std::size_t> w(16, 0);
  whole.accumulate(data::make_batch(ptrs, w), 1.0, nullptr);

  auto a = accumulated.params().named();
  auto b = whole.params().named();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].second->grad.size(); ++k)
      CHECK(std::abs(a[i].second->grad[k] - b[i].second->grad[k]) <= 1e-6);
  accumulated.step(1e-3);
  whole.step(1e-3);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].second->value.size(); ++k)
      CHECK(std::abs(a[i].second->value[k] - b[i].second->value[k]) <= 1e-6);
}

TEST_CASE("checkpoint roundtrip") {
  const auto dir = fs::temp_directory_path() / "caah_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto cfg = tiny_config();
  cfg.pos_weight = 0.96;
  cfg.modalities = model::Modalities::parse("vt");
  cfg.text_head_ffn = true;
  Checkpoint ckpt{model::init_model(cfg.model_config(6), 4), cfg, 0.41, 0.875, 7, 0.96};
  save_checkpoint(dir / "a.caahc", ckpt);
  const auto loaded = load_checkpoint(dir / "a.caahc");
  save_checkpoint(dir / "b.caahc", loaded);
  const auto a = data::read_file_bytes(dir / "a.caahc");
  const auto b = data::read_file_bytes(dir / "b.caahc");
  CHECK(a == b);
  CHECK(loaded.threshold == 0.41);
  CHECK(loaded.epoch == 7);
  CHECK(loaded.best_val_macro_f1 == 0.875);
  CHECK(loaded.config.pos_weight == 0.96);
  CHECK(loaded.config.modalities == cfg.modalities);
  CHECK(std::string(a.begin(), a.begin() + 4) == "CAHC");

  // Logits are reproduced to the last bit.
  auto original = ckpt.params;
  auto restored = loaded.params;
  const auto samples = random_samples(3, 6, 4, 1, 2);
  std::vector<const data::Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const std::vector<std::size_t> w(3, 0);
  const auto batch = data::make_batch(ptrs, w);
  nn::Graph<float> g(false);
  const auto x = model::forward(g, original, batch, model::Mode::eval);
  const auto y = model::forward(g, restored, batch, model::Mode::eval);
  CHECK(x.logit_full.value() == y.logit_full.value());
  CHECK(x.logit_text.value() == y.logit_text.value());
}

TEST_CASE("checkpoint decoding rejects corrupt input") {
  auto cfg = tiny_config();
  Checkpoint ckpt{model::init_model(cfg.model_config(4), 1), cfg, 0.5, 0.5, 1, 1.0};
  const auto bytes = encode_checkpoint(ckpt);
  auto magic = bytes;
  magic[1] = 'X';
  try {
    decode_checkpoint(magic);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("CAHC") != std::string::npos);
  }
  auto version = bytes;
  version[4] = 42;
  CHECK_THROWS_AS(decode_checkpoint(version), DataError);
  CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 3)), DataError);
  CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(8)), DataError);
  auto trailing = bytes;
  trailing.push_back(1);
  CHECK_THROWS_AS(decode_checkpoint(trailing), DataError);
}

TEST_CASE("train config json is strict and roundtrips") {
  auto cfg = tiny_config();
  cfg.pos_weight = 1.5;
  cfg.sweep = SweepSource::full;
  cfg.modalities = model::Modalities::parse("at");
  const auto back = train_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  auto j = to_json(cfg);
  j["learning_rate"] = 0.1;
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
  j = to_json(cfg);
  j["patience"] = 100;
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
  j = to_json(cfg);
  j["label_smoothing"] = 1.0;
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
  j = to_json(cfg);
  j["loss_weight"] = 1.5;
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
  j = to_json(cfg);
  j["lr"] = "fast";
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
}

TEST_CASE("training is deterministic and keeps the best epoch") {
  const auto ds = tiny_synth(10);
  const auto tr = pick(ds.samples, data::Split::train);
  const auto va = pick(ds.samples, data::Split::val);
  const auto cfg = tiny_config();
  const auto a = train::train(tr, va, cfg);
  const auto b = train::train(tr, va, cfg);
  CHECK(encode_checkpoint(a.best) == encode_checkpoint(b.best));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(to_json(a.history[i]) == to_json(b.history[i]));
  double best = -1.0;
  for (const auto& r : a.history) {
    best = std::max(best, r.val_macro_f1);
    CHECK(r.threshold >= 0.25);
    CHECK(r.threshold <= 0.75);
    CHECK(std::isfinite(r.train_loss));
  }
  CHECK(a.best.best_val_macro_f1 == best);
  CHECK(a.pos_weight == 1.0);

  auto other = cfg;
  other.seed = 1;
  CHECK_FALSE(encode_checkpoint(train::train(tr, va, other).best) == encode_checkpoint(a.best));
}

TEST_CASE("history lines carry the plotting fields") {
  const auto path = fs::temp_directory_path() / "caah_history.jsonl";
  const EpochRecord recs[] = {{1, 0.7, 0.5, 0.3, 1e-3}, {2, 0.6, 0.6, 0.4, 5e-4}};
  write_history(path, recs);
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"epoch", "train_loss", "val_macro_f1", "threshold", "lr"}) CHECK(j.contains(k));
    ++n;
  }
  CHECK(n == 2);
}

TEST_CASE("non-finite loss aborts with epoch and batch") {
  auto ds = tiny_synth(10);
  for (auto& s : ds.samples)
    for (auto& v : s.text.tokens) v = 3e38f;
  const auto tr = pick(ds.samples, data::Split::train);
  const auto va = pick(ds.samples, data::Split::val);
  try {
    train::train(tr, va, tiny_config());
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 1") != std::string::npos);
  }
}

TEST_CASE("training needs non-empty train and val splits") {
  const auto ds = tiny_synth(10);
  const auto tr = pick(ds.samples, data::Split::train);
  CHECK_THROWS_AS(train::train(tr, {}, tiny_config()), DataError);
  CHECK_THROWS_AS(train::train({}, tr, tiny_config()), DataError);
}
