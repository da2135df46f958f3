#pragma once

// Contrastive and one-class objectives.
//
// Two families share each name:
//  * Eigen overloads take single latent vectors (or a d x B batch where noted)
//    and return a double. Scoring uses these.
//  * Var overloads take d x B batches on a tape (one column per sample) and
//    return a 1 x B row of per-sample losses, except the batch-level
//    regularizers which return 1 x 1.
//
// A set of K transformed views is passed as a d x K matrix (one view per
// column) in the Eigen family and as a span of K d x B Vars in the tape family.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cdcl/autodiff.hpp"
#include "cdcl/types.hpp"

namespace cdcl {

enum class LossMode { CDCL, CCL, DCL, OCC, CCL_REG };

std::string_view to_string(LossMode mode);
/// Throws std::invalid_argument naming the offending value.
LossMode parse_loss_mode(std::string_view text);
inline constexpr LossMode kAllLossModes[] = {LossMode::CDCL, LossMode::CCL, LossMode::DCL,
                                             LossMode::OCC, LossMode::CCL_REG};

/// True for modes that own a transformation bank.
inline bool uses_transforms(LossMode m) { return m == LossMode::CDCL || m == LossMode::DCL; }
/// True for modes that need the context latent.
inline bool uses_context(LossMode m) {
  return m == LossMode::CDCL || m == LossMode::CCL || m == LossMode::CCL_REG;
}

struct LossConfig {
  double temperature = 0.1;
  LossMode mode = LossMode::CDCL;
  double hinge_gamma = 1.0;
  double var_eps = 1e-4;
  /// Coefficient on the sum of squared parameter norms. Zero disables it.
  double weight_decay = 0.0;
  /// Hypersphere center, OCC mode only. Fixed after initialization.
  Vector occ_center;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Eigen family

namespace detail {

template <typename Derived>
double floored_norm(const Eigen::MatrixBase<Derived>& v) {
  return std::sqrt(std::max(v.squaredNorm(), kNumericFloor));
}

template <typename A, typename B>
void require_same_length(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                         const char* op) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

}  // namespace detail

/// Squared Euclidean distance between suspect and context latents.
template <typename A, typename B>
double ccl(const Eigen::MatrixBase<A>& suspect, const Eigen::MatrixBase<B>& context) {
  detail::require_same_length(suspect, context, "ccl");
  return (suspect - context).squaredNorm();
}

template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_same_length(a, b, "cosine_similarity");
  return a.dot(b) / (detail::floored_norm(a) * detail::floored_norm(b));
}

/// exp(cos(a, b) / temperature).
template <typename A, typename B>
double h(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double temperature) {
  return std::exp(cosine_similarity(a, b) / temperature);
}

/// Discriminative contrastive loss of one sample:
///   -sum_k log[ h(o, v_k) / (h(o, v_k) + sum_{l != k} h(v_k, v_l)) ].
template <typename A, typename V>
double dcl(const Eigen::MatrixBase<A>& original, const Eigen::MatrixBase<V>& views,
           double temperature) {
  const Index k_count = views.cols();
  if (k_count < 2) throw std::invalid_argument("dcl: needs at least 2 transformations");
  if (views.rows() != original.size()) throw std::invalid_argument("dcl: dimension mismatch");
  double loss = 0.0;
  for (Index k = 0; k < k_count; ++k) {
    const double positive = cosine_similarity(original, views.col(k)) / temperature;
    double denominator = std::exp(positive);
    for (Index l = 0; l < k_count; ++l)
      if (l != k) denominator += h(views.col(k), views.col(l), temperature);
    loss += std::log(std::max(denominator, kNumericFloor)) - positive;
  }
  return loss;
}

/// Sum over views of the squared distance to the context latent.
template <typename V, typename B>
double cncl(const Eigen::MatrixBase<V>& views, const Eigen::MatrixBase<B>& context) {
  if (views.rows() != context.size()) throw std::invalid_argument("cncl: dimension mismatch");
  return (views.colwise() - context.derived().col(0)).squaredNorm();
}

template <typename A, typename V, typename B>
double cdcl(const Eigen::MatrixBase<A>& original, const Eigen::MatrixBase<V>& views,
            const Eigen::MatrixBase<B>& context, double temperature) {
  return cncl(views, context) + dcl(original, views, temperature);
}

/// One-class objective over a d x B batch: mean squared distance to `center`
/// plus lambda times the supplied sum of squared weight norms.
template <typename L, typename C>
double occ(const Eigen::MatrixBase<L>& latents, const Eigen::MatrixBase<C>& center, double lambda,
           double squared_weight_norms) {
  if (latents.rows() != center.size()) throw std::invalid_argument("occ: dimension mismatch");
  if (latents.cols() == 0) throw std::invalid_argument("occ: empty batch");
  const double data = (latents.colwise() - center.derived().col(0)).colwise().squaredNorm().mean();
  return data + lambda * squared_weight_norms;
}

/// Variance hinge over a d x B batch:
///   (1/d) sum_j max(0, gamma - sqrt(Var_j + eps)),
/// with Var_j the unbiased variance of row j across the batch.
template <typename L>
double var_reg(const Eigen::MatrixBase<L>& batch, double gamma, double eps) {
  const Index b = batch.cols();
  if (b < 2) throw std::invalid_argument("var_reg: batch needs at least 2 samples");
  const Vector mu = batch.rowwise().mean();
  const Vector var =
      (batch.colwise() - mu).rowwise().squaredNorm() / static_cast<double>(b - 1);
  return (gamma - (var.array() + eps).sqrt()).max(0.0).mean();
}

// ---------------------------------------------------------------------------
// Tape family

Var ccl(Var suspect, Var context);
Var cosine_similarity(Var a, Var b);
Var h(Var a, Var b, double temperature);
Var dcl(Var original, std::span<const Var> views, double temperature);
Var cncl(std::span<const Var> views, Var context);
Var cdcl(Var original, std::span<const Var> views, Var context, double temperature);
/// Per-sample squared distance to a fixed center (no weight term).
Var occ(Var latents, const Vector& center);
/// 1 x 1 variance hinge over the batch columns.
Var var_reg(Var batch, double gamma, double eps);
/// 1 x 1 sum of squared entries over all given tensors.
Var squared_norm_sum(std::span<const Var> tensors);

}  // namespace cdcl
