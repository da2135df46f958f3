#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cdcl/model.hpp"

namespace cdcl {

struct TrainConfig {
  double learning_rate = 1e-3;
  Index max_epochs = 50;
  Index patience = 10;
  Index batch_size = 64;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adam moments for a fixed list of parameters.
struct AdamState {
  explicit AdamState(const std::vector<Parameter*>& params);

  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
void adam_step(AdamState& state, const std::vector<Parameter*>& params, double learning_rate);

struct TrainValSplit {
  std::span<const WindowSample> train;
  std::span<const WindowSample> validation;
};

/// Chronological split: validation is the last ceil(fraction * n) samples.
TrainValSplit split_train_val(std::span<const WindowSample> samples, double val_fraction);

/// Tracks the best validation loss and how long it has gone unimproved.
class EarlyStopping {
 public:
  explicit EarlyStopping(Index patience) : patience_(patience) {}

  /// Records the next epoch's validation loss; returns true if it improved.
  bool update(double validation_loss);
  [[nodiscard]] bool should_stop() const { return stale_ >= patience_; }
  [[nodiscard]] Index best_epoch() const { return best_epoch_; }
  [[nodiscard]] double best_loss() const { return best_; }

 private:
  Index patience_;
  Index epoch_ = 0;
  Index best_epoch_ = 0;
  Index stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  Index epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  Index best_epoch = 0;
  double best_validation_loss = 0.0;
  bool stopped_early = false;
  double wall_seconds = 0.0;
};

/// Raised when a batch objective is not finite.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` with Adam on shuffled mini-batches of the training part,
/// evaluating the objective in eval mode on the validation part after each
/// epoch. On return `model` holds the best-validation snapshot. OCC mode sets
/// the hypersphere center from the initial network before the first step.
TrainReport train(Model& model, std::span<const WindowSample> samples, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Mean eval-mode objective over `samples` in consecutive batches.
double mean_objective(Model& model, std::span<const WindowSample> samples, Index batch_size);

/// Mean over latent dimensions of the variance of eval-mode suspect latents.
double suspect_variance(Model& model, std::span<const WindowSample> samples);

struct CollapseReport {
  double variance_start = 0.0;
  double variance_end = 0.0;
  /// Batch CCL values of every optimizer step, in order.
  std::vector<double> step_losses;
  TrainReport training;
};

/// Trains a CCL-mode model and records how the spread of suspect latents
/// changes. Descriptive only. Throws std::invalid_argument for other modes.
CollapseReport collapse_demo(Model& model, std::span<const WindowSample> samples,
                             const TrainConfig& config);

}  // namespace cdcl
