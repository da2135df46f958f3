#include "cdcl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "cdcl/random.hpp"

namespace cdcl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate: must be > 0");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs: must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience: must be >= 1");
  if (patience > max_epochs) throw std::invalid_argument("patience: must be <= max_epochs");
  if (batch_size < 2) throw std::invalid_argument("batch_size: must be >= 2");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("val_fraction: must be in (0, 1)");
}

AdamState::AdamState(const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) {
    first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void adam_step(AdamState& state, const std::vector<Parameter*>& params, double learning_rate) {
  if (params.size() != state.first_moment.size())
    throw std::invalid_argument("adam_step: parameter count differs from optimizer state");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (p.grad.rows() != m.rows() || p.grad.cols() != m.cols() || p.value.rows() != m.rows() ||
        p.value.cols() != m.cols())
      throw std::invalid_argument("adam_step: shape mismatch for '" + p.name + "'");
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -=
        learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

TrainValSplit split_train_val(std::span<const WindowSample> samples, double val_fraction) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("val_fraction: must be in (0, 1)");
  const std::size_t n = samples.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n)
    throw std::invalid_argument("split_train_val: " + std::to_string(n) +
                                " samples cannot fill both a training and a validation part");
  return {samples.first(n - n_val), samples.last(n_val)};
}

bool EarlyStopping::update(double validation_loss) {
  ++epoch_;
  if (validation_loss < best_) {
    best_ = validation_loss;
    best_epoch_ = epoch_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, Index batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> batches;
  const auto size = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < n; start += size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + size)));
  // A trailing single sample has no batch statistics of its own.
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

using StepCallback = std::function<void(double)>;

TrainReport train_impl(Model& model, std::span<const WindowSample> samples,
                       const TrainConfig& config, const EpochCallback& on_epoch,
                       const StepCallback& on_step) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  const auto start_time = std::chrono::steady_clock::now();
  const TrainValSplit split = split_train_val(samples, config.val_fraction);

  if (model.mode() == LossMode::OCC) model.init_occ_center(split.train);

  Rng rng(mix_seed(config.seed, 0x747261696e));
  std::vector<Parameter*> params = model.parameters();
  AdamState adam(params);
  EarlyStopping stopper(config.patience);
  Model best = model;
  TrainReport report;

  std::vector<WindowSample> batch;
  for (Index epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t seen = 0;
    const auto batches = make_batches(split.train.size(), config.batch_size, rng);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      batch.clear();
      for (std::size_t idx : batches[bi]) batch.push_back(split.train[idx]);
      for (Parameter* p : params) p->zero_grad();
      Tape tape;
      Var loss = model.objective(tape, batch, Mode::train, /*update_running=*/true);
      const double value = loss.scalar();
      if (!std::isfinite(value)) {
        throw TrainingAborted("non-finite training loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(bi));
      }
      tape.backward(loss);
      adam_step(adam, params, config.learning_rate);
      loss_sum += value * static_cast<double>(batch.size());
      seen += batch.size();
      if (on_step) on_step(value);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(seen);
    record.validation_loss = mean_objective(model, split.validation, config.batch_size);
    if (!std::isfinite(record.validation_loss))
      throw TrainingAborted("non-finite validation loss at epoch " + std::to_string(epoch));
    report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (stopper.update(record.validation_loss)) best = model;
    if (stopper.should_stop()) {
      report.stopped_early = epoch < config.max_epochs;
      break;
    }
  }

  model = std::move(best);
  report.best_epoch = stopper.best_epoch();
  report.best_validation_loss = stopper.best_loss();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

}  // namespace

TrainReport train(Model& model, std::span<const WindowSample> samples, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  return train_impl(model, samples, config, on_epoch, {});
}

double mean_objective(Model& model, std::span<const WindowSample> samples, Index batch_size) {
  if (samples.empty()) throw std::invalid_argument("mean_objective: no samples");
  const auto size = static_cast<std::size_t>(std::max<Index>(batch_size, 2));
  double total = 0.0;
  std::size_t start = 0;
  while (start < samples.size()) {
    std::size_t count = std::min(size, samples.size() - start);
    // Fold a trailing single sample into this batch.
    if (samples.size() - start - count == 1) ++count;
    Tape tape;
    total += model.objective(tape, samples.subspan(start, count), Mode::eval).scalar() *
             static_cast<double>(count);
    start += count;
  }
  return total / static_cast<double>(samples.size());
}

double suspect_variance(Model& model, std::span<const WindowSample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("suspect_variance: needs >= 2 samples");
  Tape tape;
  const Matrix z = model.encoder
                       .forward(tape, stack_suspects(samples), samples.front().suspect.cols(),
                                Mode::eval)
                       .value();
  const Vector mu = z.rowwise().mean();
  return ((z.colwise() - mu).rowwise().squaredNorm() / static_cast<double>(z.cols() - 1)).mean();
}

CollapseReport collapse_demo(Model& model, std::span<const WindowSample> samples,
                             const TrainConfig& config) {
  if (model.mode() != LossMode::CCL)
    throw std::invalid_argument("collapse_demo: requires CCL mode, got " +
                                std::string(to_string(model.mode())));
  const auto probe = samples.first(std::min<std::size_t>(samples.size(), 256));
  CollapseReport report;
  report.variance_start = suspect_variance(model, probe);
  report.training = train_impl(model, samples, config, {},
                               [&](double loss) { report.step_losses.push_back(loss); });
  report.variance_end = suspect_variance(model, probe);
  return report;
}

}  // namespace cdcl
