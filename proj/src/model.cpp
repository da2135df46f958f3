#include "cdcl/model.hpp"

#include <stdexcept>

#include "cdcl/random.hpp"

namespace cdcl {

Model::Model(EncoderConfig encoder_config, Index transforms, LossConfig loss_config)
    : loss(std::move(loss_config)) {
  loss.validate();
  if (loss.mode == LossMode::OCC) encoder_config.use_bias = false;
  const std::uint64_t seed = encoder_config.seed;
  encoder = Encoder(std::move(encoder_config));
  if (uses_transforms(loss.mode)) {
    if (transforms < 2) throw std::invalid_argument("transforms: K must be >= 2");
    bank = TransformBank(transforms, encoder.config().hidden_dim, mix_seed(seed, 0x62616e6b));
  }
  if (loss.mode == LossMode::OCC && loss.occ_center.size() == 0)
    loss.occ_center = Vector::Zero(encoder.config().hidden_dim);
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = encoder.parameters();
  if (uses_transforms(loss.mode))
    for (Parameter* p : bank.parameters()) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> Model::named_arrays() {
  auto out = encoder.named_arrays();
  if (uses_transforms(loss.mode))
    for (auto& entry : bank.named_arrays()) out.push_back(entry);
  return out;
}

Var Model::objective(Tape& tape, std::span<const WindowSample> batch, Mode mode,
                     bool update_running) {
  if (batch.empty()) throw std::invalid_argument("objective: empty batch");
  const auto b = static_cast<Index>(batch.size());
  const Index length = batch.front().suspect.cols();

  Var suspect;
  Var context;
  if (uses_context(loss.mode)) {
    Matrix both(batch.front().suspect.rows(), 2 * b * length);
    both.leftCols(b * length) = stack_suspects(batch);
    both.rightCols(b * length) = stack_contexts(batch);
    Var z = encoder.forward(tape, both, length, mode, update_running);
    suspect = slice_cols(z, 0, b);
    context = slice_cols(z, b, b);
  } else {
    suspect = encoder.forward(tape, stack_suspects(batch), length, mode, update_running);
  }

  Var total;
  switch (loss.mode) {
    case LossMode::CDCL: {
      auto views = bank.apply_all(tape, suspect);
      total = mean(cdcl(suspect, views, context, loss.temperature));
      break;
    }
    case LossMode::CCL:
      total = mean(ccl(suspect, context));
      break;
    case LossMode::CCL_REG:
      total = add(mean(ccl(suspect, context)),
                  add(var_reg(suspect, loss.hinge_gamma, loss.var_eps),
                      var_reg(context, loss.hinge_gamma, loss.var_eps)));
      break;
    case LossMode::DCL: {
      auto views = bank.apply_all(tape, suspect);
      total = mean(dcl(suspect, views, loss.temperature));
      break;
    }
    case LossMode::OCC:
      total = mean(occ(suspect, loss.occ_center));
      break;
  }

  if (loss.weight_decay > 0.0) {
    std::vector<Var> weights;
    for (Parameter* p : parameters()) weights.push_back(tape.param(*p));
    total = add(total, scale(squared_norm_sum(weights), loss.weight_decay));
  }
  return total;
}

Latents Model::latents(const WindowSample& sample) {
  Latents z;
  const Index length = sample.suspect.cols();
  Tape tape;
  if (uses_context(loss.mode)) {
    Matrix both(sample.suspect.rows(), 2 * length);
    both.leftCols(length) = sample.suspect;
    both.rightCols(length) = sample.context;
    const Matrix out = encoder.forward(tape, both, length, Mode::eval).value();
    z.suspect = out.col(0);
    z.context = out.col(1);
  } else {
    z.suspect = encoder.forward(tape, sample.suspect, length, Mode::eval).value().col(0);
  }
  if (uses_transforms(loss.mode)) z.views = bank.apply_all(z.suspect);
  return z;
}

double score_from_latents(const Latents& z, const LossConfig& loss) {
  switch (loss.mode) {
    case LossMode::CDCL: return cdcl(z.suspect, z.views, z.context, loss.temperature);
    case LossMode::CCL:
    case LossMode::CCL_REG: return ccl(z.suspect, z.context);
    case LossMode::DCL: return dcl(z.suspect, z.views, loss.temperature);
    case LossMode::OCC: return (z.suspect - loss.occ_center).squaredNorm();
  }
  throw std::logic_error("unknown loss mode");
}

double Model::score(const WindowSample& sample) { return score_from_latents(latents(sample), loss); }

void Model::init_occ_center(std::span<const WindowSample> samples) {
  if (samples.empty()) throw std::invalid_argument("init_occ_center: no samples");
  Vector sum = Vector::Zero(encoder.config().hidden_dim);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const auto chunk = samples.subspan(start, std::min(kChunk, samples.size() - start));
    Tape tape;
    const Matrix z = encoder.forward(tape, stack_suspects(chunk), chunk.front().suspect.cols(),
                                     Mode::eval)
                         .value();
    sum += z.rowwise().sum();
  }
  loss.occ_center = sum / static_cast<double>(samples.size());
}

}  // namespace cdcl
