#include "cdcl/pipeline.hpp"

namespace cdcl {

TrainedRun train_run(RunConfig config, const TimeSeries& train, const EpochCallback& on_epoch) {
  config.encoder.input_channels = train.channels();
  config.validate(false);
  TrainedRun run;
  Checkpoint& c = run.checkpoint;
  if (config.normalize) {
    c.normalization = fit_normalizer(train);
  } else {
    c.normalization.min = Vector::Zero(train.channels());
    c.normalization.max = Vector::Ones(train.channels());
  }
  const auto windows = make_windows(apply_normalizer(c.normalization, train), config.window);
  c.model = build_model(config);
  run.report = cdcl::train(c.model, windows, config.train, on_epoch);
  c.summary = summarize(run.report);
  c.config = std::move(config);
  return run;
}

ScoreSeries score_run(Checkpoint& checkpoint, const TimeSeries& test) {
  if (test.channels() != checkpoint.config.encoder.input_channels)
    throw std::invalid_argument("test series has " + std::to_string(test.channels()) +
                                " channels, the model expects " +
                                std::to_string(checkpoint.config.encoder.input_channels));
  return score_series(checkpoint.model, apply_normalizer(checkpoint.normalization, test),
                      checkpoint.config.window);
}

}  // namespace cdcl
