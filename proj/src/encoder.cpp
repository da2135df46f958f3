#include "cdcl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cdcl/random.hpp"

namespace cdcl {

void EncoderConfig::validate() const {
  if (input_channels < 1) throw std::invalid_argument("input_channels: must be >= 1");
  if (kernel_set.empty()) throw std::invalid_argument("kernel_set: must not be empty");
  for (Index k : kernel_set)
    if (k < 1) throw std::invalid_argument("kernel_set: kernel sizes must be >= 1");
  const auto m = static_cast<Index>(kernel_set.size());
  if (hidden_dim < m) throw std::invalid_argument("hidden_dim: must be >= number of kernels");
  if (hidden_dim % m != 0)
    throw std::invalid_argument("hidden_dim: must be divisible by the number of kernels");
  if (blocks < 1) throw std::invalid_argument("blocks: must be >= 1");
  if (dilation_base < 1) throw std::invalid_argument("dilation_base: must be >= 1");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0))
    throw std::invalid_argument("bn_momentum: must be in (0, 1]");
  if (!(bn_eps > 0.0)) throw std::invalid_argument("bn_eps: must be > 0");
}

Index EncoderConfig::max_kernel() const {
  return *std::max_element(kernel_set.begin(), kernel_set.end());
}

Index EncoderConfig::dilation(Index block, std::optional<Index> sequence_length) const {
  Index d = 1;
  const Index cap = sequence_length.value_or(std::numeric_limits<Index>::max());
  for (Index i = 0; i < block && d < cap; ++i) {
    d = d > cap / dilation_base ? cap : d * dilation_base;
  }
  return std::min(d, cap);
}

Index receptive_field(const EncoderConfig& config, std::optional<Index> sequence_length) {
  Index field = 1;
  for (Index b = 0; b < config.blocks; ++b)
    field += (config.max_kernel() - 1) * config.dilation(b, sequence_length);
  return field;
}

namespace {

Parameter uniform_param(std::string name, Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Parameter(std::move(name), rng.uniform_matrix(rows, cols, -bound, bound));
}

}  // namespace

Encoder::Encoder(EncoderConfig config) : config_(std::move(config)) {
  config_.validate();
  const Index d = config_.hidden_dim;
  const Index n = config_.input_channels;
  const Index branch = config_.branch_channels();
  Rng rng(mix_seed(config_.seed, 0x656e63));

  input_weight_ = uniform_param("encoder.input.weight", d, n, n, rng);
  if (config_.use_bias) input_bias_ = uniform_param("encoder.input.bias", d, 1, n, rng);

  blocks_.resize(static_cast<std::size_t>(config_.blocks));
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    TcnBlock& block = blocks_[b];
    const std::string prefix = "encoder.block" + std::to_string(b);
    for (std::size_t i = 0; i < config_.kernel_set.size(); ++i) {
      const Index k = config_.kernel_set[i];
      block.branches.push_back(uniform_param(prefix + ".branch" + std::to_string(i) + ".weight",
                                             branch, d * k, d * k, rng));
    }
    block.norm.weight = Parameter(prefix + ".norm.weight", Matrix::Ones(d, 1));
    if (config_.use_bias) block.norm.bias = Parameter(prefix + ".norm.bias", Matrix::Zero(d, 1));
    block.norm.running_mean = Matrix::Zero(d, 1);
    block.norm.running_var = Matrix::Ones(d, 1);
  }

  output_weight_ = uniform_param("encoder.output.weight", d, d, d, rng);
  if (config_.use_bias) output_bias_ = uniform_param("encoder.output.bias", d, 1, d, rng);
}

Var Encoder::block_forward(Tape& tape, std::size_t block_index, Var features, Index length,
                           Mode mode, bool update_running) {
  TcnBlock& block = blocks_.at(block_index);
  if (features.rows() != config_.hidden_dim)
    throw std::invalid_argument("block_forward: expected " + std::to_string(config_.hidden_dim) +
                                " feature channels");
  const Index dil = config_.dilation(static_cast<Index>(block_index), length);

  std::vector<Var> branches;
  branches.reserve(block.branches.size());
  for (std::size_t i = 0; i < block.branches.size(); ++i) {
    branches.push_back(conv1d_causal(features, tape.param(block.branches[i]),
                                     config_.kernel_set[i], dil, length, /*left_pad=*/true));
  }
  Var mixed = concat_rows(branches);

  BatchNorm& bn = block.norm;
  Var normed;
  if (mode == Mode::train) {
    Var mu = row_mean(mixed);
    Var centered = sub_colwise(mixed, mu);
    Var var = row_mean(square(centered));
    normed = div_colwise(centered, sqrt(add_scalar(var, config_.bn_eps)));
    if (update_running) {
      const double n = static_cast<double>(mixed.cols());
      const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
      const double m = config_.bn_momentum;
      bn.running_mean = (1.0 - m) * bn.running_mean + m * mu.value();
      bn.running_var = (1.0 - m) * bn.running_var + m * unbias * var.value();
    }
  } else {
    Var mu = tape.constant(bn.running_mean);
    Var sd = tape.constant((bn.running_var.array() + config_.bn_eps).sqrt().matrix());
    normed = div_colwise(sub_colwise(mixed, mu), sd);
  }
  Var affine = mul_colwise(normed, tape.param(bn.weight));
  if (config_.use_bias) affine = add_colwise(affine, tape.param(bn.bias));
  return add(relu(affine), features);
}

Var Encoder::forward(Tape& tape, const Matrix& sequences, Index length, Mode mode,
                     bool update_running) {
  if (sequences.rows() != config_.input_channels)
    throw std::invalid_argument("encode: expected " + std::to_string(config_.input_channels) +
                                " channels, got " + std::to_string(sequences.rows()));
  if (length < 1 || sequences.cols() % length != 0 || sequences.cols() == 0)
    throw std::invalid_argument("encode: columns are not a whole number of sequences");
  const Index batch = sequences.cols() / length;

  Var z = matmul(tape.param(input_weight_), tape.constant(sequences));
  if (config_.use_bias) z = add_colwise(z, tape.param(input_bias_));
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    z = block_forward(tape, b, z, length, mode, update_running);

  std::vector<Index> last(static_cast<std::size_t>(batch));
  for (Index i = 0; i < batch; ++i) last[static_cast<std::size_t>(i)] = i * length + length - 1;
  Var out = matmul(tape.param(output_weight_), gather_cols(z, std::move(last)));
  if (config_.use_bias) out = add_colwise(out, tape.param(output_bias_));
  return out;
}

Vector Encoder::encode(const Matrix& sequence) {
  Tape tape;
  return forward(tape, sequence, sequence.cols(), Mode::eval).value().col(0);
}

std::vector<Parameter*> Encoder::parameters() {
  std::vector<Parameter*> out{&input_weight_};
  if (config_.use_bias) out.push_back(&input_bias_);
  for (TcnBlock& b : blocks_) {
    for (Parameter& p : b.branches) out.push_back(&p);
    out.push_back(&b.norm.weight);
    if (config_.use_bias) out.push_back(&b.norm.bias);
  }
  out.push_back(&output_weight_);
  if (config_.use_bias) out.push_back(&output_bias_);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> Encoder::named_arrays() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (Parameter* p : parameters()) out.emplace_back(p->name, &p->value);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string prefix = "encoder.block" + std::to_string(b) + ".norm";
    out.emplace_back(prefix + ".running_mean", &blocks_[b].norm.running_mean);
    out.emplace_back(prefix + ".running_var", &blocks_[b].norm.running_var);
  }
  return out;
}

void Encoder::zero_weights() {
  for (Parameter* p : parameters()) {
    bool is_norm_scale = false;
    for (TcnBlock& b : blocks_) is_norm_scale = is_norm_scale || p == &b.norm.weight;
    if (!is_norm_scale) p->value.setZero();
  }
}

void Encoder::make_constant(const Vector& value) {
  if (!config_.use_bias) throw std::logic_error("make_constant: encoder has no bias terms");
  if (value.size() != config_.hidden_dim)
    throw std::invalid_argument("make_constant: value must have hidden_dim entries");
  zero_weights();
  output_bias_.value = value;
}

}  // namespace cdcl
