#include "cdcl/autodiff.hpp"

#include <stdexcept>
#include <string>

namespace cdcl {

namespace {

Tape& common_tape(std::initializer_list<Var> vars) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.attached()) throw std::invalid_argument("operation on a detached Var");
    if (tape == nullptr) tape = v.tape();
    if (v.tape() != tape) throw std::invalid_argument("operands live on different tapes");
  }
  return *tape;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void require_column(const Matrix& a, const Matrix& col, const char* op) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw std::invalid_argument(std::string(op) + ": expected a " + std::to_string(a.rows()) +
                                "x1 column");
  }
}

double floored_divisor(double b) {
  if (b >= 0.0) return b < kNumericFloor ? kNumericFloor : b;
  return b > -kNumericFloor ? -kNumericFloor : b;
}

}  // namespace

// ---------------------------------------------------------------------------

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::invalid_argument("value of a detached Var");
  return tape_->value(*this);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::invalid_argument("scalar() on a non-scalar Var");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, {}, false});
  return Var(this, static_cast<Index>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& parameter) {
  nodes_.push_back(Node{parameter.value, Matrix(), &parameter, {}, true});
  return Var(this, static_cast<Index>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    check_owned(p);
    needs = needs || nodes_[static_cast<std::size_t>(p.id())].requires_grad;
  }
  if (!needs) backward = nullptr;
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, std::move(backward), needs});
  return Var(this, static_cast<Index>(nodes_.size()) - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
    throw std::invalid_argument("Var is detached from this tape");
  }
}

const Matrix& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[static_cast<std::size_t>(v.id())].value;
}

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[static_cast<std::size_t>(v.id())].requires_grad;
}

const Matrix& Tape::grad(Var v) const {
  check_owned(v);
  return nodes_[static_cast<std::size_t>(v.id())].grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  check_owned(v);
  Node& node = nodes_[static_cast<std::size_t>(v.id())];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    require_same_shape(node.value, g, "gradient");
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var root) {
  if (!root.attached()) throw std::invalid_argument("backward from a detached Var");
  check_owned(root);
  const auto root_id = static_cast<std::size_t>(root.id());
  if (nodes_[root_id].value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar (1x1) root");
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[root_id].requires_grad) return;
  nodes_[root_id].grad = Matrix::Ones(1, 1);

  for (std::size_t i = root_id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0 || !node.backward) continue;
    // The closure may append into other nodes' grad slots but never resizes
    // the node vector, so the reference stays valid.
    node.backward(node.grad, *this);
  }
  for (Node& node : nodes_) {
    if (node.parameter == nullptr || node.grad.size() == 0) continue;
    Parameter& p = *node.parameter;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
    p.grad += node.grad;
  }
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
  Tape& t = common_tape({a, b});
  require_same_shape(a.value(), b.value(), "add");
  return t.record(a.value() + b.value(), {a, b}, [a, b](const Matrix& g, Tape& tape) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape({a, b});
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(a.value() - b.value(), {a, b}, [a, b](const Matrix& g, Tape& tape) {
    tape.accumulate(a, g);
    tape.accumulate(b, Matrix(-g));
  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape({a, b});
  require_same_shape(a.value(), b.value(), "mul");
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](const Matrix& g, Tape& tape) {
    if (tape.requires_grad(a)) tape.accumulate(a, g.cwiseProduct(b.value()));
    if (tape.requires_grad(b)) tape.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var div(Var a, Var b) {
  Tape& t = common_tape({a, b});
  require_same_shape(a.value(), b.value(), "div");
  const Matrix safe = b.value().unaryExpr(&floored_divisor);
  Matrix out = a.value().cwiseQuotient(safe);
  return t.record(std::move(out), {a, b}, [a, b, safe](const Matrix& g, Tape& tape) {
    if (tape.requires_grad(a)) tape.accumulate(a, g.cwiseQuotient(safe));
    if (tape.requires_grad(b)) {
      Matrix gb = -g.cwiseProduct(a.value()).cwiseQuotient(safe.cwiseProduct(safe));
      const Matrix& bv = b.value();
      for (Index i = 0; i < gb.size(); ++i)
        if (std::abs(bv(i)) < kNumericFloor) gb(i) = 0.0;
      tape.accumulate(b, gb);
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = common_tape({a});
  return t.record(a.value() * s, {a},
                  [a, s](const Matrix& g, Tape& tape) { tape.accumulate(a, Matrix(g * s)); });
}

Var add_scalar(Var a, double s) {
  Tape& t = common_tape({a});
  return t.record((a.value().array() + s).matrix(), {a},
                  [a](const Matrix& g, Tape& tape) { tape.accumulate(a, g); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var matmul(Var a, Var b) {
  Tape& t = common_tape({a, b});
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + ")");
  }
  return t.record(a.value() * b.value(), {a, b}, [a, b](const Matrix& g, Tape& tape) {
    if (tape.requires_grad(a)) tape.accumulate(a, Matrix(g * b.value().transpose()));
    if (tape.requires_grad(b)) tape.accumulate(b, Matrix(a.value().transpose() * g));
  });
}

Var relu(Var a) {
  Tape& t = common_tape({a});
  Matrix out = a.value().cwiseMax(0.0);
  return t.record(std::move(out), {a}, [a](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix((a.value().array() > 0.0).select(g.array(), 0.0)));
  });
}

Var tanh(Var a) {
  Tape& t = common_tape({a});
  Matrix out = a.value().array().tanh().matrix();
  return t.record(out, {a}, [a, out](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix(g.array() * (1.0 - out.array().square())));
  });
}

Var sigmoid(Var a) {
  Tape& t = common_tape({a});
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return t.record(out, {a}, [a, out](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix(g.array() * out.array() * (1.0 - out.array())));
  });
}

Var exp(Var a) {
  Tape& t = common_tape({a});
  Matrix out = a.value().array().exp().matrix();
  return t.record(out, {a}, [a, out](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix(g.cwiseProduct(out)));
  });
}

Var log(Var a) {
  Tape& t = common_tape({a});
  Matrix out = a.value().cwiseMax(kNumericFloor).array().log().matrix();
  return t.record(std::move(out), {a}, [a](const Matrix& g, Tape& tape) {
    const auto& x = a.value().array();
    tape.accumulate(a, Matrix((x > kNumericFloor).select(g.array() / x, 0.0)));
  });
}

Var sqrt(Var a) {
  Tape& t = common_tape({a});
  Matrix out = a.value().cwiseMax(kNumericFloor).cwiseSqrt();
  return t.record(out, {a}, [a, out](const Matrix& g, Tape& tape) {
    const auto& x = a.value().array();
    tape.accumulate(a, Matrix((x > kNumericFloor).select(0.5 * g.array() / out.array(), 0.0)));
  });
}

Var square(Var a) {
  Tape& t = common_tape({a});
  return t.record(a.value().array().square().matrix(), {a}, [a](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix(2.0 * g.cwiseProduct(a.value())));
  });
}

Var clamp_min(Var a, double lo) {
  Tape& t = common_tape({a});
  return t.record(a.value().cwiseMax(lo), {a}, [a, lo](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix((a.value().array() > lo).select(g.array(), 0.0)));
  });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(Var a) {
  Tape& t = common_tape({a});
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [a](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var l2_norm(Var a) { return sqrt(sum(square(a))); }

Var row_mean(Var a) {
  Tape& t = common_tape({a});
  const Index n = a.cols();
  if (n == 0) throw std::invalid_argument("row_mean of an empty tensor");
  return t.record(a.value().rowwise().mean(), {a}, [a, n](const Matrix& g, Tape& tape) {
    tape.accumulate(a, Matrix(g.replicate(1, n) / static_cast<double>(n)));
  });
}

Var col_sum(Var a) {
  Tape& t = common_tape({a});
  const Index r = a.rows();
  return t.record(a.value().colwise().sum(), {a},
                  [a, r](const Matrix& g, Tape& tape) { tape.accumulate(a, Matrix(g.replicate(r, 1))); });
}

Var col_norm(Var a) { return sqrt(col_sum(square(a))); }

// ---------------------------------------------------------------------------
// Broadcasts

Var add_colwise(Var a, Var col) {
  Tape& t = common_tape({a, col});
  require_column(a.value(), col.value(), "add_colwise");
  Matrix out = a.value().colwise() + col.value().col(0);
  return t.record(std::move(out), {a, col}, [a, col](const Matrix& g, Tape& tape) {
    tape.accumulate(a, g);
    if (tape.requires_grad(col)) tape.accumulate(col, Matrix(g.rowwise().sum()));
  });
}

Var sub_colwise(Var a, Var col) {
  Tape& t = common_tape({a, col});
  require_column(a.value(), col.value(), "sub_colwise");
  Matrix out = a.value().colwise() - col.value().col(0);
  return t.record(std::move(out), {a, col}, [a, col](const Matrix& g, Tape& tape) {
    tape.accumulate(a, g);
    if (tape.requires_grad(col)) tape.accumulate(col, Matrix(-g.rowwise().sum()));
  });
}

Var mul_colwise(Var a, Var col) {
  Tape& t = common_tape({a, col});
  require_column(a.value(), col.value(), "mul_colwise");
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return t.record(std::move(out), {a, col}, [a, col](const Matrix& g, Tape& tape) {
    if (tape.requires_grad(a))
      tape.accumulate(a, Matrix(g.array().colwise() * col.value().col(0).array()));
    if (tape.requires_grad(col))
      tape.accumulate(col, Matrix(g.cwiseProduct(a.value()).rowwise().sum()));
  });
}

Var div_colwise(Var a, Var col) {
  Tape& t = common_tape({a, col});
  require_column(a.value(), col.value(), "div_colwise");
  const Vector safe = col.value().col(0).unaryExpr(&floored_divisor);
  Matrix out = a.value().array().colwise() / safe.array();
  return t.record(out, {a, col}, [a, col, safe, out](const Matrix& g, Tape& tape) {
    if (tape.requires_grad(a)) tape.accumulate(a, Matrix(g.array().colwise() / safe.array()));
    if (tape.requires_grad(col)) {
      Vector gc = -(g.cwiseProduct(out).rowwise().sum().array() / safe.array()).matrix();
      const Matrix& cv = col.value();
      for (Index i = 0; i < gc.size(); ++i)
        if (std::abs(cv(i, 0)) < kNumericFloor) gc(i) = 0.0;
      tape.accumulate(col, Matrix(gc));
    }
  });
}

// ---------------------------------------------------------------------------
// Structure

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows of nothing");
  Tape& t = common_tape({parts.front()});
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Var& p : parts) {
    common_tape({parts.front(), p});
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return t.record(std::move(out), parents, [parents](const Matrix& g, Tape& tape) {
    Index offset = 0;
    for (const Var& p : parents) {
      const Index n = p.rows();
      if (tape.requires_grad(p)) tape.accumulate(p, Matrix(g.middleRows(offset, n)));
      offset += n;
    }
  });
}

Var gather_cols(Var a, std::vector<Index> index) {
  Tape& t = common_tape({a});
  const Matrix& av = a.value();
  Matrix out(av.rows(), static_cast<Index>(index.size()));
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] < 0 || index[j] >= av.cols()) throw std::out_of_range("gather_cols: bad column");
    out.col(static_cast<Index>(j)) = av.col(index[j]);
  }
  return t.record(std::move(out), {a}, [a, index = std::move(index)](const Matrix& g, Tape& tape) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t j = 0; j < index.size(); ++j) ga.col(index[j]) += g.col(static_cast<Index>(j));
    tape.accumulate(a, ga);
  });
}

Var slice_cols(Var a, Index start, Index count) {
  Tape& t = common_tape({a});
  if (start < 0 || count < 0 || start + count > a.cols())
    throw std::out_of_range("slice_cols: range outside tensor");
  return t.record(a.value().middleCols(start, count), {a},
                  [a, start, count](const Matrix& g, Tape& tape) {
                    Matrix ga = Matrix::Zero(a.rows(), a.cols());
                    ga.middleCols(start, count) = g;
                    tape.accumulate(a, ga);
                  });
}

// ---------------------------------------------------------------------------
// Convolution

Index conv1d_output_length(Index length, Index k, Index dilation, bool left_pad) {
  if (k < 1) throw std::invalid_argument("conv1d: kernel size must be >= 1");
  if (dilation < 1) throw std::invalid_argument("conv1d: dilation must be >= 1");
  if (length < 1) throw std::invalid_argument("conv1d: empty input");
  if (left_pad) return length;
  const Index span = (k - 1) * dilation;
  if (length < span + 1) {
    throw std::invalid_argument("conv1d: length " + std::to_string(length) +
                                " too short for receptive span " + std::to_string(span + 1) +
                                " without padding");
  }
  return length - span;
}

Var conv1d_causal(Var input, Var kernel, Index k, Index dilation, Index segment_length,
                  bool left_pad) {
  Tape& t = common_tape({input, kernel});
  const Matrix& x = input.value();
  const Matrix& w = kernel.value();
  const Index cin = x.rows();
  if (segment_length < 1 || x.cols() % segment_length != 0)
    throw std::invalid_argument("conv1d: columns are not a whole number of segments");
  if (w.cols() != cin * k)
    throw std::invalid_argument("conv1d: kernel expects " + std::to_string(w.cols()) +
                                " input taps but input has " + std::to_string(cin) +
                                " channels x k=" + std::to_string(k));
  const Index out_len = conv1d_output_length(segment_length, k, dilation, left_pad);
  const Index segments = x.cols() / segment_length;

  // Column (s, t) of `patches` holds, in row i*k + j, the input sample that
  // tap j of channel i sees at output position t of segment s.
  Matrix patches = Matrix::Zero(cin * k, segments * out_len);
  const Index base = left_pad ? -(k - 1) * dilation : 0;
  for (Index s = 0; s < segments; ++s) {
    for (Index j = 0; j < k; ++j) {
      const Index offset = base + j * dilation;  // source = t + offset
      const Index t0 = std::max<Index>(0, -offset);
      const Index n = out_len - t0;
      if (n <= 0) continue;
      for (Index i = 0; i < cin; ++i) {
        patches.row(i * k + j).segment(s * out_len + t0, n) =
            x.row(i).segment(s * segment_length + t0 + offset, n);
      }
    }
  }
  Matrix out = w * patches;
  return t.record(std::move(out), {input, kernel},
                  [input, kernel, patches = std::move(patches), k, dilation, segment_length,
                   out_len, segments, base](const Matrix& g, Tape& tape) {
                    if (tape.requires_grad(kernel))
                      tape.accumulate(kernel, Matrix(g * patches.transpose()));
                    if (!tape.requires_grad(input)) return;
                    const Matrix dpatches = kernel.value().transpose() * g;
                    const Index cin = input.rows();
                    Matrix gx = Matrix::Zero(cin, input.cols());
                    for (Index s = 0; s < segments; ++s) {
                      for (Index j = 0; j < k; ++j) {
                        const Index offset = base + j * dilation;
                        const Index t0 = std::max<Index>(0, -offset);
                        const Index n = out_len - t0;
                        if (n <= 0) continue;
                        for (Index i = 0; i < cin; ++i) {
                          gx.row(i).segment(s * segment_length + t0 + offset, n) +=
                              dpatches.row(i * k + j).segment(s * out_len + t0, n);
                        }
                      }
                    }
                    tape.accumulate(input, gx);
                  });
}

}  // namespace cdcl
