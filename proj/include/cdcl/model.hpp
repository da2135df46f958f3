#pragma once

#include <span>
#include <vector>

#include "cdcl/autodiff.hpp"
#include "cdcl/data.hpp"
#include "cdcl/encoder.hpp"
#include "cdcl/losses.hpp"
#include "cdcl/transforms.hpp"

namespace cdcl {

/// Latent quantities of one window: O (suspect), G (context) and the K
/// transformed suspect views as columns.
struct Latents {
  Vector suspect;
  Vector context;
  Matrix views;
};

/// Encoder plus (mode permitting) transformation bank and the loss settings
/// that decide how they are trained and scored.
class Model {
 public:
  Model() = default;
  /// The OCC mode forces `encoder_config.use_bias` off. `transforms` is the
  /// bank size K; the bank is only built for modes that use it.
  Model(EncoderConfig encoder_config, Index transforms, LossConfig loss);

  Encoder encoder;
  TransformBank bank;
  LossConfig loss;

  [[nodiscard]] LossMode mode() const { return loss.mode; }

  /// Parameters the current mode trains, in a fixed order.
  std::vector<Parameter*> parameters();
  /// Stored arrays of the encoder and (mode permitting) bank. The OCC center
  /// lives in `loss` and is persisted separately.
  std::vector<std::pair<std::string, Matrix*>> named_arrays();

  /// Mean training objective over the batch, as a 1x1 tape node.
  Var objective(Tape& tape, std::span<const WindowSample> batch, Mode mode,
                bool update_running = false);

  /// Eval-mode latents of one window.
  Latents latents(const WindowSample& sample);
  /// Eval-mode anomaly score of one window (higher is more anomalous).
  double score(const WindowSample& sample);

  /// Sets the OCC center to the mean eval-mode suspect latent over `samples`.
  void init_occ_center(std::span<const WindowSample> samples);
};

/// Per-sample score of `mode` computed from latents with the Eigen losses.
double score_from_latents(const Latents& z, const LossConfig& loss);

}  // namespace cdcl
