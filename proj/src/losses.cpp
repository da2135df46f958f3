#include "cdcl/losses.hpp"

#include <string>

namespace cdcl {

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::CDCL: return "CDCL";
    case LossMode::CCL: return "CCL";
    case LossMode::DCL: return "DCL";
    case LossMode::OCC: return "OCC";
    case LossMode::CCL_REG: return "CCL_REG";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view text) {
  for (LossMode m : kAllLossModes)
    if (to_string(m) == text) return m;
  throw std::invalid_argument("mode: unknown loss mode '" + std::string(text) +
                              "' (expected CDCL, CCL, DCL, OCC or CCL_REG)");
}

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature: must be > 0");
  if (!(hinge_gamma > 0.0)) throw std::invalid_argument("hinge_gamma: must be > 0");
  if (!(var_eps > 0.0)) throw std::invalid_argument("var_eps: must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay: must be >= 0");
}

Var ccl(Var suspect, Var context) { return col_sum(square(sub(suspect, context))); }

Var cosine_similarity(Var a, Var b) {
  return div(col_sum(mul(a, b)), mul(col_norm(a), col_norm(b)));
}

Var h(Var a, Var b, double temperature) {
  return exp(scale(cosine_similarity(a, b), 1.0 / temperature));
}

Var dcl(Var original, std::span<const Var> views, double temperature) {
  const std::size_t k_count = views.size();
  if (k_count < 2) throw std::invalid_argument("dcl: needs at least 2 transformations");
  const double inv_t = 1.0 / temperature;

  // Pairwise view scores, computed once per unordered pair.
  std::vector<std::vector<Var>> pair(k_count, std::vector<Var>(k_count));
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t l = k + 1; l < k_count; ++l) pair[k][l] = pair[l][k] = h(views[k], views[l], temperature);

  Var loss;
  for (std::size_t k = 0; k < k_count; ++k) {
    Var positive = scale(cosine_similarity(original, views[k]), inv_t);
    Var denominator = exp(positive);
    for (std::size_t l = 0; l < k_count; ++l)
      if (l != k) denominator = add(denominator, pair[k][l]);
    Var term = sub(log(denominator), positive);
    loss = loss.attached() ? add(loss, term) : term;
  }
  return loss;
}

Var cncl(std::span<const Var> views, Var context) {
  if (views.empty()) throw std::invalid_argument("cncl: no views");
  Var loss = ccl(views[0], context);
  for (std::size_t k = 1; k < views.size(); ++k) loss = add(loss, ccl(views[k], context));
  return loss;
}

Var cdcl(Var original, std::span<const Var> views, Var context, double temperature) {
  return add(cncl(views, context), dcl(original, views, temperature));
}

Var occ(Var latents, const Vector& center) {
  if (center.size() != latents.rows()) throw std::invalid_argument("occ: dimension mismatch");
  Var c = latents.tape()->constant(Matrix(center));
  return col_sum(square(sub_colwise(latents, c)));
}

Var var_reg(Var batch, double gamma, double eps) {
  const Index b = batch.cols();
  if (b < 2) throw std::invalid_argument("var_reg: batch needs at least 2 samples");
  Var centered = sub_colwise(batch, row_mean(batch));
  Var variance = scale(row_mean(square(centered)), static_cast<double>(b) / static_cast<double>(b - 1));
  Var std_dev = sqrt(add_scalar(variance, eps));
  return mean(relu(add_scalar(neg(std_dev), gamma)));
}

Var squared_norm_sum(std::span<const Var> tensors) {
  if (tensors.empty()) throw std::invalid_argument("squared_norm_sum: no tensors");
  Var total = sum(square(tensors[0]));
  for (std::size_t i = 1; i < tensors.size(); ++i) total = add(total, sum(square(tensors[i])));
  return total;
}

}  // namespace cdcl
