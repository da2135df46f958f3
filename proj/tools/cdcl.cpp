#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cdcl/checkpoint.hpp"
#include "cdcl/config.hpp"
#include "cdcl/eval.hpp"
#include "cdcl/loss_gradcheck.hpp"
#include "cdcl/pipeline.hpp"
#include "cdcl/synthgen.hpp"

namespace fs = std::filesystem;
using namespace cdcl;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

/// Input problems the user can fix: bad config, bad files, wrong checkpoint.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
}

TimeSeries load_series(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("'" + path.string() + "' does not exist");
  return load_csv(path, csv_has_label_column(path));
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  if (path.empty()) throw UsageError("--config is required");
  RunConfig config = load_run_config(path);
  if (seed) config.set_seed(*seed);
  return config;
}

void write_train_report(const fs::path& path, const Checkpoint& c, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "mode = " << to_string(c.config.loss.mode) << '\n'
      << "epochs = " << report.epochs.size() << '\n'
      << "best_epoch = " << report.best_epoch << '\n'
      << "best_validation_loss = " << report.best_validation_loss << '\n'
      << "stopped_early = " << (report.stopped_early ? "true" : "false") << '\n'
      << "wall_seconds = " << report.wall_seconds << '\n';
  for (const EpochRecord& r : report.epochs)
    out << "epoch." << r.epoch << " = " << r.train_loss << ' ' << r.validation_loss << '\n';
}

int cmd_generate(const std::string& config_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed) {
  SynthSpec spec = config_path.empty() ? SynthSpec{} : load_synth_spec(config_path);
  if (seed) spec.seed = *seed;
  const SynthData data = generate(spec);
  ensure_dir(out_dir);
  write_csv(out_dir / "train.csv", data.train);
  write_csv(out_dir / "test.csv", data.test);
  std::cout << "wrote " << (out_dir / "train.csv").string() << " (" << data.train.ticks()
            << " ticks) and " << (out_dir / "test.csv").string() << " (" << data.test.ticks()
            << " ticks)\n";
  return kOk;
}

int cmd_train(const std::string& config_path, std::optional<fs::path> out,
              std::optional<std::uint64_t> seed) {
  RunConfig config = load_config(config_path, seed);
  if (out) config.out_dir = *out;
  config.validate(true);
  const TimeSeries train = load_series(config.train_path);
  TrainedRun run = train_run(config, train, [](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << "  train " << r.train_loss << "  validation "
              << r.validation_loss << '\n';
  });
  ensure_dir(config.out_dir);
  save_checkpoint(config.out_dir / "model.ckpt", run.checkpoint);
  write_train_report(config.out_dir / "train_report.txt", run.checkpoint, run.report);
  std::cout << "best epoch " << run.report.best_epoch << " of " << run.report.epochs.size()
            << ", validation loss " << run.report.best_validation_loss << "\n"
            << "wrote " << (config.out_dir / "model.ckpt").string() << '\n';
  return kOk;
}

int cmd_score(const fs::path& checkpoint_path, const fs::path& test_path, const fs::path& out) {
  if (checkpoint_path.empty()) throw UsageError("--checkpoint is required");
  if (test_path.empty()) throw UsageError("--test is required");
  Checkpoint c = load_checkpoint(checkpoint_path);
  const ScoreSeries scores = score_run(c, load_series(test_path));
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_scores_csv(out, scores);
  std::cout << "wrote " << scores.scores.size() << " scores to " << out.string() << '\n';
  return kOk;
}

std::vector<int> require_labels(const fs::path& test_path) {
  if (test_path.empty()) throw UsageError("--test is required");
  if (!fs::exists(test_path)) throw UsageError("'" + test_path.string() + "' does not exist");
  if (!csv_has_label_column(test_path))
    throw UsageError("'" + test_path.string() + "' has no label column");
  return *load_csv(test_path, true).labels;
}

int cmd_evaluate(const fs::path& scores_path, const fs::path& test_path, bool adjust, bool sweep,
                 const fs::path& out_dir) {
  if (scores_path.empty()) throw UsageError("--scores is required");
  const ScoreSeries scores = read_scores_csv(scores_path);
  const std::vector<int> labels = require_labels(test_path);
  std::vector<SweepRow> rows;
  const EvalReport report = best_f1_search(scores.scores, labels, adjust, sweep ? &rows : nullptr);
  ensure_dir(out_dir);
  write_report(out_dir / "report.txt", report);
  if (sweep) write_sweep_csv(out_dir / "sweep.csv", rows);
  std::cout << std::fixed << std::setprecision(4) << "f1 " << report.f1 << "  precision "
            << report.precision << "  recall " << report.recall << "  roc_auc " << report.roc_auc
            << "  threshold " << std::defaultfloat << report.threshold
            << (adjust ? "  (point-adjusted)" : "") << '\n';
  return kOk;
}

int cmd_ablate(const std::string& config_path, const std::string& modes_text,
               std::optional<fs::path> out, std::optional<std::uint64_t> seed, bool adjust) {
  RunConfig base = load_config(config_path, seed);
  if (out) base.out_dir = *out;
  base.validate(true);
  if (base.test_path.empty()) throw UsageError("test_path: required for ablate");
  std::vector<LossMode> modes;
  std::stringstream in(modes_text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) modes.push_back(parse_loss_mode(item));
  if (modes.empty()) throw UsageError("--modes: no modes given");

  const TimeSeries train = load_series(base.train_path);
  const TimeSeries test = load_series(base.test_path);
  if (!test.labels) throw UsageError("'" + base.test_path.string() + "' has no label column");

  ensure_dir(base.out_dir);
  std::ofstream table(base.out_dir / "ablation.csv");
  table << "mode,f1,precision,recall,roc_auc,best_epoch\n";
  std::cout << std::left << std::setw(9) << "mode" << std::right << std::setw(8) << "f1"
            << std::setw(10) << "roc_auc" << std::setw(12) << "best_epoch" << '\n';
  for (LossMode mode : modes) {
    RunConfig config = base;
    config.loss.mode = mode;
    TrainedRun run = train_run(config, train);
    const ScoreSeries scores = score_run(run.checkpoint, test);
    const EvalReport r = best_f1_search(scores.scores, *test.labels, adjust);
    table << std::setprecision(std::numeric_limits<double>::max_digits10) << to_string(mode)
          << ',' << r.f1 << ',' << r.precision << ',' << r.recall << ',' << r.roc_auc << ','
          << run.report.best_epoch << '\n';
    std::cout << std::left << std::setw(9) << to_string(mode) << std::right << std::fixed
              << std::setprecision(4) << std::setw(8) << r.f1 << std::setw(10) << r.roc_auc
              << std::setw(12) << run.report.best_epoch << std::defaultfloat << '\n';
  }
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto rows = loss_gradchecks(seed);
  bool ok = true;
  std::cout << std::left << std::setw(9) << "loss" << std::right << std::setw(14) << "rel_error"
            << std::setw(14) << "zero_grad_fd" << std::setw(8) << "result" << '\n';
  for (const auto& r : rows) {
    ok = ok && r.passed;
    std::cout << std::left << std::setw(9) << r.loss << std::right << std::scientific
              << std::setprecision(3) << std::setw(14) << r.result.nonzero_relative_error
              << std::setw(14) << r.result.zero_max_numeric << std::setw(8)
              << (r.passed ? "pass" : "FAIL") << std::defaultfloat << '\n';
  }
  return ok ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual discriminative contrastive anomaly detection for time series"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_text;
  std::uint64_t seed_value = 0;
  bool adjust = false;
  bool sweep = false;
  std::string checkpoint_path, test_path, scores_path;
  std::string modes = "CDCL,CCL,DCL,OCC,CCL_REG";

  auto* generate_cmd = app.add_subcommand("generate", "Write synthetic train.csv and test.csv");
  generate_cmd->add_option("--config", config_path, "Synthetic spec (key = value)");
  generate_cmd->add_option("--out", out_text, "Output directory")->required();
  auto* generate_seed = generate_cmd->add_option("--seed", seed_value, "Override the spec seed");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--config", config_path, "Run config (key = value)")->required();
  auto* train_out = train_cmd->add_option("--out", out_text, "Output directory");
  auto* train_seed = train_cmd->add_option("--seed", seed_value, "Override the config seed");

  auto* score_cmd = app.add_subcommand("score", "Score a test series with a checkpoint");
  score_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  score_cmd->add_option("--test", test_path, "Test CSV")->required();
  score_cmd->add_option("--out", out_text, "Scores CSV to write")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Best-F1 evaluation of a score file");
  evaluate_cmd->add_option("--scores", scores_path, "Scores CSV")->required();
  evaluate_cmd->add_option("--test", test_path, "Labelled test CSV")->required();
  evaluate_cmd->add_flag("--adjust", adjust, "Apply point adjustment");
  evaluate_cmd->add_flag("--sweep", sweep, "Also write one CSV row per threshold");
  evaluate_cmd->add_option("--out", out_text, "Output directory")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate several loss modes");
  ablate_cmd->add_option("--config", config_path, "Run config with train_path and test_path")
      ->required();
  ablate_cmd->add_option("--modes", modes, "Comma-separated modes");
  auto* ablate_out = ablate_cmd->add_option("--out", out_text, "Output directory");
  auto* ablate_seed = ablate_cmd->add_option("--seed", seed_value, "Override the config seed");
  ablate_cmd->add_flag("--adjust", adjust, "Apply point adjustment");

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  gradcheck_cmd->add_option("--seed", seed_value, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  auto seed_if = [&](CLI::Option* opt) -> std::optional<std::uint64_t> {
    if (opt->count() > 0) return seed_value;
    return std::nullopt;
  };
  auto path_if = [&](CLI::Option* opt) -> std::optional<fs::path> {
    if (opt->count() > 0) return fs::path(out_text);
    return std::nullopt;
  };

  try {
    if (*generate_cmd) return cmd_generate(config_path, out_text, seed_if(generate_seed));
    if (*train_cmd) return cmd_train(config_path, path_if(train_out), seed_if(train_seed));
    if (*score_cmd) return cmd_score(checkpoint_path, test_path, out_text);
    if (*evaluate_cmd) return cmd_evaluate(scores_path, test_path, adjust, sweep, out_text);
    if (*ablate_cmd)
      return cmd_ablate(config_path, modes, path_if(ablate_out), seed_if(ablate_seed), adjust);
    if (*gradcheck_cmd) return cmd_gradcheck(seed_value);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kValidation;
}
