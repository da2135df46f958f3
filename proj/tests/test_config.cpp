#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdcl/checkpoint.hpp"
#include "cdcl/config.hpp"
#include "cdcl/pipeline.hpp"
#include "cdcl/synthgen.hpp"

using namespace cdcl;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "cdcl_test_config";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_run_config(parse_key_values(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

RunConfig tiny_run(LossMode mode) {
  RunConfig c;
  c.window = {12, 2, 1};
  c.encoder.hidden_dim = 8;
  c.encoder.blocks = 2;
  c.transforms = 3;
  c.loss.mode = mode;
  c.train.max_epochs = 2;
  c.train.patience = 2;
  c.set_seed(5);
  return c;
}

TimeSeries small_train() {
  SynthSpec spec;
  spec.train_length = 200;
  spec.test_length = 100;
  return generate(spec).train;
}

}  // namespace

TEST_CASE("parse_key_values: comments, blanks and errors") {
  const auto kv = parse_key_values("# header\n\n a = 1 \nb=two words\n");
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two words");
  CHECK_THROWS_WITH_AS(parse_key_values("a = 1\na = 2\n"), doctest::Contains("duplicate"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_key_values("a = 1\nnothing here\n"), doctest::Contains("line 2"),
                       ConfigError);
}

TEST_CASE("run config: defaults, overrides and error messages") {
  const RunConfig d = parse_run_config({});
  CHECK(d.encoder.hidden_dim == 32);
  CHECK(d.encoder.blocks == 8);
  CHECK(d.loss.temperature == 0.1);
  CHECK(d.transforms == 6);
  CHECK(d.window.suspect_offset == 5);
  CHECK(d.loss.mode == LossMode::CDCL);

  const RunConfig c = parse_run_config(parse_key_values(
      "mode = OCC\nhidden_dim = 16\nkernel_set = 2, 3\nlearning_rate = 0.01\nnormalize = false\n"));
  CHECK(c.loss.mode == LossMode::OCC);
  CHECK(c.encoder.hidden_dim == 16);
  CHECK(c.encoder.kernel_set == std::vector<Index>{2, 3});
  CHECK(c.train.learning_rate == 0.01);
  CHECK(!c.normalize);

  CHECK(config_error("mode = FOO\n").rfind("mode", 0) == 0);
  CHECK(config_error("colour = red\n").rfind("colour: unknown key", 0) == 0);
  CHECK(config_error("hidden_dim = 3.5\n").rfind("hidden_dim", 0) == 0);
  CHECK(config_error("normalize = maybe\n").rfind("normalize", 0) == 0);
}

TEST_CASE("run config: validate names the offending key") {
  RunConfig c;
  c.train.patience = 100;
  CHECK_THROWS_WITH_AS(c.validate(false), doctest::Contains("patience"), ConfigError);
  c = {};
  c.transforms = 1;
  CHECK_THROWS_WITH_AS(c.validate(false), doctest::Contains("transforms"), ConfigError);
  c.loss.mode = LossMode::CCL;
  CHECK_NOTHROW(c.validate(false));
  c.train_path = scratch() / "does_not_exist.csv";
  CHECK_THROWS_WITH_AS(c.validate(true), doctest::Contains("train_path"), ConfigError);
}

TEST_CASE("run config: format and parse round-trip") {
  RunConfig c = tiny_run(LossMode::CCL_REG);
  c.train_path = "data/train.csv";
  c.loss.temperature = 1.0 / 3.0;
  c.train.val_fraction = 0.15;
  const std::string text = format_run_config(c);
  const RunConfig back = parse_run_config(parse_key_values(text));
  CHECK(format_run_config(back) == text);
  CHECK(back.loss.temperature == c.loss.temperature);
  CHECK(back.train.seed == 5);
}

TEST_CASE("load_run_config resolves data paths against the config directory") {
  const fs::path dir = scratch() / "nested";
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "train_path = train.csv\ntest_path = /abs/test.csv\n";
  const RunConfig c = load_run_config(dir / "run.cfg");
  CHECK(c.train_path == dir / "train.csv");
  CHECK(c.test_path == fs::path("/abs/test.csv"));
}

TEST_CASE("synth spec: round-trip and validation") {
  SynthSpec s;
  s.seed = 9;
  s.weight(AnomalyType::seasonal) = 0.5;
  s.noise_std = 0.1;
  const SynthSpec back = parse_synth_spec(parse_key_values(format_synth_spec(s)));
  CHECK(format_synth_spec(back) == format_synth_spec(s));
  CHECK(back.weight(AnomalyType::seasonal) == 0.5);
  CHECK_THROWS_WITH_AS(parse_synth_spec(parse_key_values("period = -1\n")),
                       doctest::Contains("period"), ConfigError);
  CHECK_THROWS_AS(parse_synth_spec(parse_key_values("size = 3\n")), ConfigError);
}

TEST_CASE("checkpoint: save, load, save again is byte-identical and scores identically") {
  const TimeSeries train = small_train();
  SynthSpec spec;
  spec.train_length = 200;
  spec.test_length = 100;
  const TimeSeries test = generate(spec).test;
  for (LossMode mode : kAllLossModes) {
    INFO(to_string(mode));
    TrainedRun run = train_run(tiny_run(mode), train);
    const ScoreSeries before = score_run(run.checkpoint, test);
    const fs::path a = scratch() / "a.ckpt", b = scratch() / "b.ckpt";
    save_checkpoint(a, run.checkpoint);
    Checkpoint loaded = load_checkpoint(a);
    save_checkpoint(b, loaded);
    CHECK(slurp(a) == slurp(b));
    CHECK(score_run(loaded, test).scores == before.scores);
    CHECK(loaded.summary.epochs == static_cast<Index>(run.report.epochs.size()));
    CHECK(loaded.summary.best_validation_loss == run.report.best_validation_loss);
  }
}

TEST_CASE("checkpoint: identical runs give identical files") {
  const TimeSeries train = small_train();
  const fs::path a = scratch() / "r1.ckpt", b = scratch() / "r2.ckpt";
  save_checkpoint(a, train_run(tiny_run(LossMode::CDCL), train).checkpoint);
  save_checkpoint(b, train_run(tiny_run(LossMode::CDCL), train).checkpoint);
  CHECK(slurp(a) == slurp(b));
  RunConfig other = tiny_run(LossMode::CDCL);
  other.set_seed(6);
  save_checkpoint(b, train_run(other, train).checkpoint);
  CHECK(slurp(a) != slurp(b));
}

TEST_CASE("checkpoint: version mismatch, bad magic and truncation are errors") {
  const fs::path a = scratch() / "v.ckpt";
  save_checkpoint(a, train_run(tiny_run(LossMode::CCL), small_train()).checkpoint);
  const std::string good = slurp(a);

  std::string bumped = good;
  bumped.replace(bumped.find("format_version = 1"), 18, "format_version = 2");
  std::ofstream(scratch() / "v2.ckpt", std::ios::binary) << bumped;
  CHECK_THROWS_WITH_AS(load_checkpoint(scratch() / "v2.ckpt"), doctest::Contains("version"),
                       CheckpointError);

  std::ofstream(scratch() / "magic.ckpt", std::ios::binary) << "hello\n";
  CHECK_THROWS_AS(load_checkpoint(scratch() / "magic.ckpt"), CheckpointError);

  std::ofstream(scratch() / "short.ckpt", std::ios::binary) << good.substr(0, good.size() - 9);
  CHECK_THROWS_WITH_AS(load_checkpoint(scratch() / "short.ckpt"), doctest::Contains("truncated"),
                       CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(scratch() / "missing.ckpt"), CheckpointError);
}

TEST_CASE("score_run rejects a test set with the wrong channel count") {
  TrainedRun run = train_run(tiny_run(LossMode::CCL), small_train());
  TimeSeries two;
  two.values = Matrix::Zero(2, 30);
  CHECK_THROWS_AS(score_run(run.checkpoint, two), std::invalid_argument);
}
