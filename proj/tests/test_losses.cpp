#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cdcl/data.hpp"
#include "cdcl/loss_gradcheck.hpp"
#include "cdcl/losses.hpp"
#include "cdcl/model.hpp"
#include "cdcl/random.hpp"

using namespace cdcl;

namespace {

// Frozen fixture: values below come from an independent float64 script.
Vector fixture_o() { return (Vector(4) << 0.3, -1.2, 0.5, 2.0).finished(); }
Vector fixture_g() { return (Vector(4) << 0.1, 0.4, -0.6, 1.0).finished(); }
Matrix fixture_views() {
  Matrix v(4, 3);
  v.col(0) << 1.0, 0.2, -0.4, 0.3;
  v.col(1) << -0.5, 0.9, 1.1, -0.2;
  v.col(2) << 0.7, -0.3, 0.2, 1.5;
  return v;
}

std::vector<WindowSample> random_windows(Rng& rng, Index n, Index channels, Index c) {
  std::vector<WindowSample> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)].end_tick = i;
    out[static_cast<std::size_t>(i)].suspect = rng.normal_matrix(channels, c);
    out[static_cast<std::size_t>(i)].context = rng.normal_matrix(channels, c);
  }
  return out;
}

}  // namespace

TEST_CASE("ccl: squared distance") {
  const Vector a = (Vector(2) << 1, 2).finished();
  const Vector b = (Vector(2) << 1, 0).finished();
  CHECK(ccl(a, b) == 4.0);
  CHECK(ccl(a, a) == 0.0);
  CHECK_THROWS_AS(ccl(a, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("h: parallel, antiparallel and scaled inputs") {
  const Vector a = (Vector(2) << 1, 0).finished();
  CHECK(h(a, a, 0.1) == doctest::Approx(22026.465794806718).epsilon(1e-12));
  CHECK(h(a, Vector(-a), 0.1) == doctest::Approx(std::exp(-10.0)).epsilon(1e-12));
  CHECK(std::abs(h(a, Vector(5.0 * a), 0.1) - h(a, a, 0.1)) < 1e-9);
  CHECK(h(fixture_o(), fixture_g(), 0.1) == doctest::Approx(66.91322927995499).epsilon(1e-13));
}

TEST_CASE("dcl, cncl, cdcl on the fixed fixture") {
  const Vector o = fixture_o(), g = fixture_g();
  const Matrix v = fixture_views();
  CHECK(dcl(o, v, 0.1) == doctest::Approx(4.5048483484501487).epsilon(1e-13));
  CHECK(cncl(v, g) == doctest::Approx(8.06).epsilon(1e-13));
  CHECK(cdcl::cdcl(o, v, g, 0.1) == doctest::Approx(12.564848348450148).epsilon(1e-13));
  CHECK_THROWS_AS(dcl(o, Matrix(v.leftCols(1)), 0.1), std::invalid_argument);
}

TEST_CASE("var_reg: unbiased variance hinge on the fixed fixture") {
  Matrix b(4, 3);
  b << 0.2, 1.0, -0.3, 0.5, 0.5, 0.6, 3.0, -1.0, 0.4, 0.0, 0.1, 0.05;
  CHECK(var_reg(b, 1.0, 1e-4) == doctest::Approx(0.55864876370261629).epsilon(1e-13));
  CHECK_THROWS_AS(var_reg(Matrix(b.leftCols(1)), 1.0, 1e-4), std::invalid_argument);
  // Rows spread far beyond gamma contribute nothing.
  CHECK(var_reg(Matrix(100.0 * b.topRows(3)), 1.0, 1e-4) == 0.0);
}

TEST_CASE("occ: mean squared distance plus weight term") {
  Matrix z(2, 2);
  z << 1, 3, 0, 0;
  const Vector c = Vector::Zero(2);
  CHECK(occ(z, c, 0.0, 0.0) == 5.0);
  CHECK(occ(z, c, 0.5, 4.0) == 7.0);
}

TEST_CASE("loss modes parse and print") {
  for (LossMode m : kAllLossModes) CHECK(parse_loss_mode(to_string(m)) == m);
  try {
    parse_loss_mode("FOO");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("FOO") != std::string::npos);
  }
}

TEST_CASE("tape losses agree with the Eigen losses column by column") {
  Rng rng(13);
  const Index d = 5, b = 4, k = 3;
  const Matrix o = rng.normal_matrix(d, b), g = rng.normal_matrix(d, b);
  std::vector<Matrix> views;
  for (Index i = 0; i < k; ++i) views.push_back(rng.normal_matrix(d, b));
  const Vector center = rng.normal_matrix(d, 1).col(0);

  Tape tape;
  Var vo = tape.constant(o), vg = tape.constant(g);
  std::vector<Var> vv;
  for (const Matrix& v : views) vv.push_back(tape.constant(v));
  const Matrix t_ccl = ccl(vo, vg).value();
  const Matrix t_dcl = dcl(vo, vv, 0.2).value();
  const Matrix t_cncl = cncl(vv, vg).value();
  const Matrix t_cdcl = cdcl::cdcl(vo, vv, vg, 0.2).value();
  const Matrix t_occ = occ(vo, center).value();
  const Matrix t_h = h(vo, vg, 0.2).value();
  for (Index j = 0; j < b; ++j) {
    Matrix vj(d, k);
    for (Index i = 0; i < k; ++i) vj.col(i) = views[static_cast<std::size_t>(i)].col(j);
    CHECK(t_ccl(0, j) == doctest::Approx(ccl(o.col(j), g.col(j))).epsilon(1e-12));
    CHECK(t_dcl(0, j) == doctest::Approx(dcl(o.col(j), vj, 0.2)).epsilon(1e-12));
    CHECK(t_cncl(0, j) == doctest::Approx(cncl(vj, g.col(j))).epsilon(1e-12));
    CHECK(t_cdcl(0, j) == doctest::Approx(cdcl::cdcl(o.col(j), vj, g.col(j), 0.2)).epsilon(1e-12));
    CHECK(t_occ(0, j) == doctest::Approx((o.col(j) - center).squaredNorm()).epsilon(1e-12));
    CHECK(t_h(0, j) == doctest::Approx(h(o.col(j), g.col(j), 0.2)).epsilon(1e-12));
  }
  CHECK(var_reg(vo, 1.0, 1e-4).scalar() == doctest::Approx(var_reg(o, 1.0, 1e-4)).epsilon(1e-12));
}

TEST_CASE("property: h is invariant to positive rescaling of either argument") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.below(16));
    const Vector a = rng.normal_matrix(d, 1).col(0);
    const Vector b = rng.normal_matrix(d, 1).col(0);
    const double alpha = std::exp(rng.uniform(-5.0, 5.0));
    const double beta = std::exp(rng.uniform(-5.0, 5.0));
    const double ref = h(a, b, 0.1);
    CHECK(std::abs(h(Vector(alpha * a), Vector(beta * b), 0.1) - ref) <= 1e-9 * std::max(1.0, ref));
  }
}

TEST_CASE("property: identical views and original give dcl = K ln K") {
  Rng rng(32);
  for (Index k = 2; k <= 8; ++k) {
    const Vector o = rng.normal_matrix(6, 1).col(0);
    const Matrix views = o.replicate(1, k);
    CHECK(std::abs(dcl(o, views, 0.1) - static_cast<double>(k) * std::log(static_cast<double>(k))) <
          1e-9);
  }
}

TEST_CASE("constant encoder and constant transforms give cdcl = K ln K per sample") {
  Rng rng(33);
  const auto windows = random_windows(rng, 5, 2, 12);
  for (Index k = 2; k <= 8; ++k) {
    EncoderConfig ec;
    ec.input_channels = 2;
    ec.hidden_dim = 8;
    ec.blocks = 2;
    ec.seed = static_cast<std::uint64_t>(k);
    LossConfig lc;
    lc.mode = LossMode::CDCL;
    Model model(ec, k, lc);
    const Vector v = rng.normal_matrix(8, 1).col(0);
    model.encoder.make_constant(v);
    model.bank.make_constant(v);
    const double expected = static_cast<double>(k) * std::log(static_cast<double>(k));
    for (const WindowSample& w : windows) CHECK(std::abs(model.score(w) - expected) < 1e-9);
    Tape tape;
    CHECK(std::abs(model.objective(tape, windows, Mode::train).scalar() - expected) < 1e-9);
  }
}

TEST_CASE("zero-weight encoder gives ccl exactly 0") {
  Rng rng(34);
  EncoderConfig ec;
  ec.input_channels = 3;
  ec.hidden_dim = 8;
  ec.blocks = 3;
  LossConfig lc;
  lc.mode = LossMode::CCL;
  Model model(ec, 0, lc);
  model.encoder.zero_weights();
  const auto windows = random_windows(rng, 6, 3, 10);
  for (const WindowSample& w : windows) CHECK(model.score(w) == 0.0);
  Tape tape;
  CHECK(model.objective(tape, windows, Mode::train).scalar() == 0.0);
}

TEST_CASE("end-to-end loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (const LossGradCheckRow& row : loss_gradchecks(seed)) {
      INFO(row.loss << " seed " << seed << " rel " << row.result.nonzero_relative_error);
      CHECK(row.passed);
    }
  }
  LossGradCheckOptions three;
  three.transforms = 3;
  for (const LossGradCheckRow& row : loss_gradchecks(1, three)) CHECK(row.passed);
}

TEST_CASE("LossConfig::validate rejects bad values") {
  LossConfig c;
  c.temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.weight_decay = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
