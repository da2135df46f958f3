#pragma once

#include <cstdint>
#include <vector>

#include "cdcl/autodiff.hpp"
#include "cdcl/types.hpp"

namespace cdcl {

/// Three linear layers d -> d -> d -> d with ReLU between them.
struct TransformMlp {
  Parameter w1, b1, w2, b2, w3, b3;
};

/// K learnable latent-space transformations. They share no parameters with
/// each other or with the encoder.
class TransformBank {
 public:
  TransformBank() = default;
  TransformBank(Index count, Index dim, std::uint64_t seed);

  [[nodiscard]] Index size() const { return static_cast<Index>(maps_.size()); }
  [[nodiscard]] Index dim() const { return dim_; }

  /// T_k applied column-wise to a d x B batch.
  Var apply(Tape& tape, std::size_t k, Var latents);
  /// [T_1(O), ..., T_K(O)] in index order.
  std::vector<Var> apply_all(Tape& tape, Var latents);
  /// Views of one latent, d x K.
  Matrix apply_all(const Vector& latent) const;

  std::vector<Parameter*> parameters();
  std::vector<std::pair<std::string, Matrix*>> named_arrays();

  TransformMlp& map(std::size_t k) { return maps_.at(k); }

  /// All weights zero and the last bias set to `value`: every T_k is constant.
  void make_constant(const Vector& value);

 private:
  Index dim_ = 0;
  std::vector<TransformMlp> maps_;
};

}  // namespace cdcl
