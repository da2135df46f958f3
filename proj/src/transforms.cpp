#include "cdcl/transforms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cdcl/random.hpp"

namespace cdcl {

namespace {

Parameter linear_param(std::string name, Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Parameter(std::move(name), rng.uniform_matrix(rows, cols, -bound, bound));
}

}  // namespace

TransformBank::TransformBank(Index count, Index dim, std::uint64_t seed) : dim_(dim) {
  if (count < 1) throw std::invalid_argument("transforms: K must be >= 1");
  if (dim < 1) throw std::invalid_argument("transforms: dimension must be >= 1");
  maps_.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    // Each map draws from its own stream so banks of different K share prefixes.
    Rng rng(mix_seed(seed, 0x7472616e + static_cast<std::uint64_t>(k)));
    const std::string p = "bank.t" + std::to_string(k);
    TransformMlp m;
    m.w1 = linear_param(p + ".w1", dim, dim, dim, rng);
    m.b1 = linear_param(p + ".b1", dim, 1, dim, rng);
    m.w2 = linear_param(p + ".w2", dim, dim, dim, rng);
    m.b2 = linear_param(p + ".b2", dim, 1, dim, rng);
    m.w3 = linear_param(p + ".w3", dim, dim, dim, rng);
    m.b3 = linear_param(p + ".b3", dim, 1, dim, rng);
    maps_.push_back(std::move(m));
  }
}

Var TransformBank::apply(Tape& tape, std::size_t k, Var latents) {
  if (latents.rows() != dim_)
    throw std::invalid_argument("transforms: latent has " + std::to_string(latents.rows()) +
                                " entries, bank expects " + std::to_string(dim_));
  TransformMlp& m = maps_.at(k);
  Var x = relu(add_colwise(matmul(tape.param(m.w1), latents), tape.param(m.b1)));
  x = relu(add_colwise(matmul(tape.param(m.w2), x), tape.param(m.b2)));
  return add_colwise(matmul(tape.param(m.w3), x), tape.param(m.b3));
}

std::vector<Var> TransformBank::apply_all(Tape& tape, Var latents) {
  std::vector<Var> out;
  out.reserve(maps_.size());
  for (std::size_t k = 0; k < maps_.size(); ++k) out.push_back(apply(tape, k, latents));
  return out;
}

Matrix TransformBank::apply_all(const Vector& latent) const {
  if (latent.size() != dim_)
    throw std::invalid_argument("transforms: latent has " + std::to_string(latent.size()) +
                                " entries, bank expects " + std::to_string(dim_));
  Matrix out(dim_, size());
  for (std::size_t k = 0; k < maps_.size(); ++k) {
    const TransformMlp& m = maps_[k];
    Vector x = (m.w1.value * latent + m.b1.value).cwiseMax(0.0);
    x = (m.w2.value * x + m.b2.value).cwiseMax(0.0);
    out.col(static_cast<Index>(k)) = m.w3.value * x + m.b3.value;
  }
  return out;
}

std::vector<Parameter*> TransformBank::parameters() {
  std::vector<Parameter*> out;
  for (TransformMlp& m : maps_)
    for (Parameter* p : {&m.w1, &m.b1, &m.w2, &m.b2, &m.w3, &m.b3}) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> TransformBank::named_arrays() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (Parameter* p : parameters()) out.emplace_back(p->name, &p->value);
  return out;
}

void TransformBank::make_constant(const Vector& value) {
  if (value.size() != dim_) throw std::invalid_argument("make_constant: dimension mismatch");
  for (Parameter* p : parameters()) p->value.setZero();
  for (TransformMlp& m : maps_) m.b3.value = value;
}

}  // namespace cdcl
