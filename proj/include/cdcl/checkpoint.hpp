#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "cdcl/config.hpp"
#include "cdcl/model.hpp"
#include "cdcl/trainer.hpp"

namespace cdcl {

inline constexpr int kCheckpointVersion = 1;

/// Raised for unreadable, truncated or incompatible checkpoint files.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainSummary {
  Index epochs = 0;
  Index best_epoch = 0;
  double best_validation_loss = 0.0;
  bool stopped_early = false;
};

TrainSummary summarize(const TrainReport& report);

struct Checkpoint {
  RunConfig config;
  Model model;
  NormalizationStats normalization;
  TrainSummary summary;
};

/// Text header followed by little-endian float64 arrays in row-major order:
///
///   cdcl-checkpoint
///   format_version = 1
///   [config]     run configuration echo
///   [report]     training summary
///   [arrays]     one "name rows cols offset" line per array
///   end
///
/// Offsets count bytes from the first byte after the "end" line.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// The model a run configuration describes, freshly initialized.
Model build_model(const RunConfig& config);

}  // namespace cdcl
