#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cdcl/eval.hpp"
#include "cdcl/random.hpp"
#include "oracles.hpp"

using namespace cdcl;
namespace fs = std::filesystem;

namespace {

std::vector<int> bits(unsigned mask, int n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
  return out;
}

bool both_classes(const std::vector<int>& l) {
  return std::count(l.begin(), l.end(), 1) > 0 && std::count(l.begin(), l.end(), 0) > 0;
}

// Random small instance; scores drawn from a few levels so ties are common.
void random_instance(Rng& rng, std::vector<double>& scores, std::vector<int>& labels) {
  do {
    const auto n = static_cast<std::size_t>(2 + rng.below(11));
    const auto levels = 2 + rng.below(6);
    scores.assign(n, 0.0);
    labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(levels)) * 0.25;
      labels[i] = rng.uniform() < 0.35 ? 1 : 0;
    }
  } while (!both_classes(labels));
}

Model scoring_model(LossMode mode, std::uint64_t seed) {
  EncoderConfig ec;
  ec.hidden_dim = 8;
  ec.blocks = 2;
  ec.seed = seed;
  LossConfig lc;
  lc.mode = mode;
  return Model(ec, 3, lc);
}

}  // namespace

TEST_CASE("point_adjust examples") {
  CHECK(point_adjust(std::vector<int>{0, 0, 1, 0}, std::vector<int>{0, 1, 1, 0}) ==
        std::vector<int>{0, 1, 1, 0});
  CHECK(point_adjust(std::vector<int>{1, 0, 1, 0}, std::vector<int>{0, 0, 0, 0}) ==
        std::vector<int>{1, 0, 1, 0});
  CHECK_THROWS_AS(point_adjust(std::vector<int>{0}, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST_CASE("point_adjust matches the segment-scan oracle on every pair up to length 6") {
  for (int n = 1; n <= 6; ++n)
    for (unsigned lm = 0; lm < (1u << n); ++lm)
      for (unsigned pm = 0; pm < (1u << n); ++pm) {
        const auto l = bits(lm, n), p = bits(pm, n);
        REQUIRE(point_adjust(p, l) == oracle::point_adjust(p, l));
      }
}

TEST_CASE("property: point_adjust is idempotent, monotone and local to label runs") {
  Rng rng(1);
  for (int trial = 0; trial < 20000; ++trial) {
    const auto l = bits(static_cast<unsigned>(rng.below(256)), 8);
    const auto p = bits(static_cast<unsigned>(rng.below(256)), 8);
    const auto once = point_adjust(p, l);
    REQUIRE(once == oracle::point_adjust(p, l));
    CHECK(point_adjust(once, l) == once);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(once[i] >= p[i]);
      if (l[i] == 0) CHECK(once[i] == p[i]);
    }
  }
}

TEST_CASE("label_segments finds maximal runs") {
  const auto s = label_segments(std::vector<int>{1, 1, 0, 1, 0, 0, 1, 1, 1});
  REQUIRE(s.size() == 3);
  CHECK(s[0].begin == 0);
  CHECK(s[0].end == 2);
  CHECK(s[1].begin == 3);
  CHECK(s[2].end == 9);
}

TEST_CASE("best_f1_search examples") {
  auto r = best_f1_search(std::vector<double>{1, 2, 3}, std::vector<int>{0, 0, 1}, false);
  CHECK(r.threshold == 3.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.roc_auc == 1.0);

  // All scores equal: one candidate, everything predicted positive.
  std::vector<SweepRow> sweep;
  r = best_f1_search(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}, false,
                     &sweep);
  CHECK(sweep.size() == 1);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.roc_auc == 0.5);

  CHECK_THROWS_AS(best_f1_search(std::vector<double>{1, 2}, std::vector<int>{0, 0}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST_CASE("best_f1_search with adjustment credits the whole segment") {
  const std::vector<double> scores{0.1, 0.2, 0.9, 0.3, 0.1, 0.5};
  const std::vector<int> labels{0, 1, 1, 1, 0, 0};
  const auto r = best_f1_search(scores, labels, true);
  CHECK(r.threshold == 0.9);
  CHECK(r.f1 == 1.0);
  CHECK(r.true_positives == 3);
  REQUIRE(r.segments.size() == 1);
  CHECK(r.segments[0].detected);
  CHECK(r.segments[0].first_detection == 2);
  const auto plain = best_f1_search(scores, labels, false);
  CHECK(plain.f1 < 1.0);
}

TEST_CASE("best_f1_search and roc_auc match brute-force oracles on random small instances") {
  Rng rng(2);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int trial = 0; trial < 2000; ++trial) {
    random_instance(rng, scores, labels);
    for (bool adjust : {false, true}) {
      std::vector<SweepRow> sweep;
      const auto r = best_f1_search(scores, labels, adjust, &sweep);
      const auto o = oracle::best_f1(scores, labels, adjust);
      REQUIRE(r.f1 == o.f1);
      REQUIRE(r.threshold == o.threshold);
      for (const SweepRow& row : sweep) CHECK(r.f1 >= row.f1);
      CHECK(std::is_sorted(sweep.begin(), sweep.end(),
                           [](const SweepRow& a, const SweepRow& b) { return a.threshold < b.threshold; }));
    }
    CHECK(std::abs(roc_auc(scores, labels) - oracle::auc(scores, labels)) <= 1e-12);
  }
}

TEST_CASE("property: strictly increasing score maps keep best F1 and AUC") {
  Rng rng(3);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int trial = 0; trial < 500; ++trial) {
    random_instance(rng, scores, labels);
    std::vector<double> mapped(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) mapped[i] = std::exp(3.0 * scores[i]) - 7.0;
    for (bool adjust : {false, true})
      CHECK(best_f1_search(scores, labels, adjust).f1 == best_f1_search(mapped, labels, adjust).f1);
    CHECK(roc_auc(scores, labels) == roc_auc(mapped, labels));
  }
}

TEST_CASE("roc_auc: separated scores give 1, independent labels about 0.5") {
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{0, 0, 1, 1}) == 0.0);
  Rng rng(4);
  std::vector<double> s(20000);
  std::vector<int> l(20000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    l[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  CHECK(std::abs(roc_auc(s, l) - 0.5) < 0.02);
}

TEST_CASE("f1_score handles empty predictions") {
  CHECK(f1_score(0, 0, 5) == 0.0);
  CHECK(f1_score(2, 2, 2) == 0.5);
}

TEST_CASE("score_series: constant-zero encoder scores K ln K everywhere") {
  Model model = scoring_model(LossMode::CDCL, 1);
  model.encoder.zero_weights();
  model.bank.make_constant(Vector::Zero(8));
  Rng rng(5);
  TimeSeries test;
  test.values = rng.normal_matrix(1, 40);
  const auto s = score_series(model, test, WindowSpec{10, 2, 3});
  CHECK(s.scores.size() == 40);
  for (double v : s.scores) CHECK(std::abs(v - 3.0 * std::log(3.0)) < 1e-12);
}

TEST_CASE("score_series: T = w broadcasts one score") {
  Model model = scoring_model(LossMode::CDCL, 2);
  Rng rng(6);
  TimeSeries test;
  test.values = rng.normal_matrix(1, 12);
  const auto s = score_series(model, test, WindowSpec{12, 3, 1});
  CHECK(s.first_scored_tick == 11);
  for (double v : s.scores) CHECK(v == s.scores.back());
}

TEST_CASE("score_series equals per-window scoring with the plain losses") {
  for (LossMode mode : kAllLossModes) {
    Model model = scoring_model(mode, 7);
    if (mode == LossMode::OCC) model.loss.occ_center = Vector::Constant(8, 0.1);
    Rng rng(7);
    TimeSeries test;
    test.values = rng.normal_matrix(1, 30);
    const WindowSpec spec{9, 2, 4};
    const auto s = score_series(model, test, spec);
    const auto windows = make_windows(test, WindowSpec{9, 2, 1});
    for (const WindowSample& w : windows) {
      Latents z;
      z.suspect = model.encoder.encode(w.suspect);
      z.context = model.encoder.encode(w.context);
      if (uses_transforms(mode)) z.views = model.bank.apply_all(z.suspect);
      const double expected = score_from_latents(z, model.loss);
      CHECK(std::abs(s.scores[static_cast<std::size_t>(w.end_tick)] - expected) <=
            1e-12 * std::max(1.0, std::abs(expected)));
    }
    for (Index t = 0; t < 8; ++t) CHECK(s.scores[static_cast<std::size_t>(t)] == s.scores[8]);
  }
}

TEST_CASE("scores CSV and report files") {
  const fs::path dir = fs::temp_directory_path() / "cdcl_test_eval";
  fs::create_directories(dir);
  ScoreSeries s;
  s.scores = {0.1, 1.0 / 3.0, 2.5e-17, 7.0};
  write_scores_csv(dir / "scores.csv", s);
  CHECK(read_scores_csv(dir / "scores.csv").scores == s.scores);

  std::ofstream(dir / "bad.csv") << "tick,score\n0,1\n2,1\n";
  CHECK_THROWS_AS(read_scores_csv(dir / "bad.csv"), ParseError);

  std::vector<SweepRow> sweep;
  const auto r = best_f1_search(s.scores, std::vector<int>{0, 1, 0, 1}, true, &sweep);
  write_report(dir / "report.txt", r);
  write_sweep_csv(dir / "sweep.csv", sweep);
  std::ifstream in(dir / "report.txt");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("f1 = ") != std::string::npos);
  CHECK(text.find("point_adjusted = true") != std::string::npos);
  CHECK(text.find("segments = 2") != std::string::npos);
  std::ifstream sin(dir / "sweep.csv");
  std::string line;
  int lines = 0;
  while (std::getline(sin, line)) ++lines;
  CHECK(lines == 1 + 4);
}
