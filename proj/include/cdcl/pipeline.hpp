#pragma once

#include "cdcl/checkpoint.hpp"
#include "cdcl/eval.hpp"

namespace cdcl {

struct TrainedRun {
  Checkpoint checkpoint;
  TrainReport report;
};

/// Fits the normalizer on `train` (identity when config.normalize is off),
/// windows it, and trains the model the config describes. The input channel
/// count is taken from the data.
TrainedRun train_run(RunConfig config, const TimeSeries& train,
                     const EpochCallback& on_epoch = {});

/// Normalizes `test` with the checkpoint's statistics and scores every tick.
ScoreSeries score_run(Checkpoint& checkpoint, const TimeSeries& test);

}  // namespace cdcl
