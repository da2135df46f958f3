#include "cdcl/loss_gradcheck.hpp"

#include "cdcl/model.hpp"
#include "cdcl/random.hpp"

namespace cdcl {

namespace {

std::vector<WindowSample> random_batch(const LossGradCheckOptions& o, Rng& rng) {
  std::vector<WindowSample> batch(static_cast<std::size_t>(o.batch));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    batch[b].end_tick = static_cast<Index>(b);
    batch[b].suspect = rng.normal_matrix(o.input_channels, o.sub_length);
    batch[b].context = rng.normal_matrix(o.input_channels, o.sub_length);
  }
  return batch;
}

}  // namespace

std::vector<LossGradCheckRow> loss_gradchecks(std::uint64_t seed,
                                              const LossGradCheckOptions& o) {
  Rng rng(mix_seed(seed, 0x67636b));
  const std::vector<WindowSample> batch = random_batch(o, rng);
  const Matrix suspects = stack_suspects(batch);
  const Matrix contexts = stack_contexts(batch);
  const Index b = o.batch;
  const Index c = o.sub_length;

  EncoderConfig ec;
  ec.input_channels = o.input_channels;
  ec.hidden_dim = o.hidden_dim;
  ec.blocks = o.blocks;
  ec.seed = seed;

  LossConfig lc;
  Model contrastive(ec, o.transforms, lc);
  lc.mode = LossMode::OCC;
  lc.weight_decay = 0.1;
  Model one_class(ec, 0, lc);
  one_class.loss.occ_center = rng.normal_matrix(o.hidden_dim, 1);

  // Suspect and context latents from one train-mode pass, as in training.
  auto encode_both = [&](Tape& tape, Model& m) {
    Matrix both(o.input_channels, 2 * b * c);
    both << suspects, contexts;
    Var z = m.encoder.forward(tape, both, c, Mode::train);
    return std::pair{slice_cols(z, 0, b), slice_cols(z, b, b)};
  };
  const double tau = contrastive.loss.temperature;

  std::vector<LossGradCheckRow> rows;
  for (const std::string& name : kGradcheckLosses) {
    Model& m = name == "OCC" ? one_class : contrastive;
    ScalarFn f = [&, name](Tape& tape) -> Var {
      if (name == "OCC") return m.objective(tape, batch, Mode::train);
      auto [s, ctx] = encode_both(tape, m);
      if (name == "CCL") return mean(ccl(s, ctx));
      if (name == "CCL_REG")
        return mean(ccl(s, ctx)) + var_reg(s, m.loss.hinge_gamma, m.loss.var_eps) +
               var_reg(ctx, m.loss.hinge_gamma, m.loss.var_eps);
      const std::vector<Var> views = m.bank.apply_all(tape, s);
      if (name == "DCL") return mean(dcl(s, views, tau));
      if (name == "CNCL") return mean(cncl(views, ctx));
      return mean(cdcl(s, views, ctx, tau));
    };
    std::vector<Parameter*> params = m.encoder.parameters();
    if (name == "DCL" || name == "CNCL" || name == "CDCL")
      for (Parameter* p : m.bank.parameters()) params.push_back(p);
    LossGradCheckRow row;
    row.loss = name;
    row.result = finite_diff_check(f, params, o.step);
    row.passed = row.result.nonzero_relative_error < o.tolerance &&
                 row.result.zero_max_numeric <= o.zero_numeric_tolerance;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cdcl
