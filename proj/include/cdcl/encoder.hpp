#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cdcl/autodiff.hpp"
#include "cdcl/types.hpp"

namespace cdcl {

enum class Mode { train, eval };

struct EncoderConfig {
  Index input_channels = 1;
  Index hidden_dim = 32;
  Index blocks = 8;
  std::vector<Index> kernel_set = {2, 3, 6, 7};
  Index dilation_base = 2;
  /// Conv biases and the batch-norm shift. Disabled for the one-class mode.
  bool use_bias = true;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] Index branch_channels() const {
    return hidden_dim / static_cast<Index>(kernel_set.size());
  }
  [[nodiscard]] Index max_kernel() const;
  /// Dilation of block b: dilation_base^b, capped at `sequence_length` when given.
  [[nodiscard]] Index dilation(Index block, std::optional<Index> sequence_length = {}) const;
};

/// 1 + sum over blocks of (max kernel - 1) * dilation(block).
Index receptive_field(const EncoderConfig& config, std::optional<Index> sequence_length = {});

struct BatchNorm {
  Parameter weight;  // scale, d x 1
  Parameter bias;    // shift, d x 1; empty without biases
  Matrix running_mean;  // d x 1
  Matrix running_var;   // d x 1
};

struct TcnBlock {
  /// One kernel per entry of kernel_set, branch_channels x (d * k).
  std::vector<Parameter> branches;
  BatchNorm norm;
};

/// Shared temporal-convolution encoder mapping an N x c sequence to a
/// d-vector: 1x1 input conv, L residual blocks of (dilated inception layer,
/// batch norm, ReLU), last-tick readout and a 1x1 output conv.
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(EncoderConfig config);

  [[nodiscard]] const EncoderConfig& config() const { return config_; }

  /// Encodes B sequences laid side by side in `sequences` (N x B*length) and
  /// returns d x B latents. In train mode batch norm uses batch statistics,
  /// which are folded into the running estimates when `update_running` is set.
  Var forward(Tape& tape, const Matrix& sequences, Index length, Mode mode,
              bool update_running = false);

  /// One dilated inception layer plus its batch norm, activation and residual
  /// add, applied to d x B*length features.
  Var block_forward(Tape& tape, std::size_t block, Var features, Index length, Mode mode,
                    bool update_running = false);

  /// Single-sequence convenience wrapper, eval mode.
  Vector encode(const Matrix& sequence);

  /// Trainable tensors in a fixed order.
  std::vector<Parameter*> parameters();
  /// Every stored array (parameters and running statistics) by stable name.
  std::vector<std::pair<std::string, Matrix*>> named_arrays();

  /// Sets all weights and biases to zero (batch-norm scale untouched).
  void zero_weights();
  /// Zero weights with the output bias set to `value`, so every input maps to
  /// `value`. Requires use_bias.
  void make_constant(const Vector& value);

  std::vector<TcnBlock>& blocks() { return blocks_; }
  Parameter& input_weight() { return input_weight_; }
  Parameter& output_weight() { return output_weight_; }

 private:
  EncoderConfig config_;
  Parameter input_weight_;   // d x N
  Parameter input_bias_;     // d x 1
  std::vector<TcnBlock> blocks_;
  Parameter output_weight_;  // d x d
  Parameter output_bias_;    // d x 1
};

}  // namespace cdcl
