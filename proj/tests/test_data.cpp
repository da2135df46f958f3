#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cdcl/data.hpp"
#include "cdcl/random.hpp"

using namespace cdcl;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "cdcl_test_data";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string parse_error_of(const fs::path& p, bool labels) {
  try {
    load_csv(p, labels);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

TimeSeries series_from(const Matrix& values) {
  TimeSeries s;
  s.values = values;
  return s;
}

}  // namespace

TEST_CASE("load_csv: 3 rows, 2 channels") {
  const auto p = write_temp("plain.csv", "a,b\n1,2\n3,4\n5,6\n");
  const TimeSeries s = load_csv(p, false);
  CHECK(s.channels() == 2);
  CHECK(s.ticks() == 3);
  CHECK(s.values(1, 2) == 6.0);
  CHECK(!s.labels);
  CHECK(s.channel_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("load_csv: label column is carried through") {
  const auto p = write_temp("labels.csv", "x,label\n0.5,0\n1.5,1\n2.5,0\n");
  const TimeSeries s = load_csv(p, true);
  CHECK(s.channels() == 1);
  REQUIRE(s.labels);
  CHECK(*s.labels == std::vector<int>{0, 1, 0});
  CHECK(csv_has_label_column(p));
}

TEST_CASE("load_csv: errors name the row") {
  CHECK(parse_error_of(write_temp("ragged.csv", "a,b\n1,2\n3\n"), false).find("row 3") !=
        std::string::npos);
  CHECK(parse_error_of(write_temp("nan.csv", "a\n1\nabc\n"), false).find("row 3") !=
        std::string::npos);
  CHECK(parse_error_of(write_temp("inf.csv", "a\ninf\n"), false).find("row 2") !=
        std::string::npos);
  CHECK(parse_error_of(write_temp("badlabel.csv", "a,label\n1,2\n"), true).find("row 2") !=
        std::string::npos);
  CHECK(!parse_error_of(write_temp("nolabel.csv", "a,b\n1,2\n"), true).empty());
  CHECK(!parse_error_of(write_temp("empty.csv", ""), false).empty());
  CHECK(!parse_error_of(write_temp("header_only.csv", "a\n"), false).empty());
  CHECK(!parse_error_of(fs::temp_directory_path() / "cdcl_missing_file.csv", false).empty());
}

TEST_CASE("write_csv and load_csv round-trip exactly") {
  Rng rng(1);
  TimeSeries s = series_from(rng.normal_matrix(3, 17, 1e3));
  s.channel_names = {"a", "b", "c"};
  s.labels = std::vector<int>(17, 0);
  (*s.labels)[4] = 1;
  const fs::path p = fs::temp_directory_path() / "cdcl_test_data" / "roundtrip.csv";
  write_csv(p, s);
  const TimeSeries back = load_csv(p, true);
  CHECK(back.values == s.values);
  CHECK(*back.labels == *s.labels);
  CHECK(back.channel_names == s.channel_names);
}

TEST_CASE("normalizer: spec examples") {
  Matrix m(2, 3);
  m << 0, 5, 10, 7, 7, 7;
  const TimeSeries train = series_from(m);
  const auto stats = fit_normalizer(train);
  const TimeSeries n = apply_normalizer(stats, train);
  CHECK(n.values(0, 0) == 0.0);
  CHECK(n.values(0, 1) == 0.5);
  CHECK(n.values(0, 2) == 1.0);
  CHECK(n.values.row(1) == RowVector::Zero(3));

  Matrix t(2, 1);
  t << 12, 3;
  const TimeSeries test = apply_normalizer(stats, series_from(t));
  CHECK(test.values(0, 0) == doctest::Approx(1.2));
  CHECK(test.values(1, 0) == 0.0);
  CHECK_THROWS_AS(apply_normalizer(stats, series_from(Matrix::Zero(3, 2))), std::invalid_argument);
}

TEST_CASE("property: normalized training data lies in [0, 1]") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(4));
    const Index t = 2 + static_cast<Index>(rng.below(30));
    const TimeSeries s = series_from(rng.normal_matrix(n, t, 100.0));
    const TimeSeries out = apply_normalizer(fit_normalizer(s), s);
    CHECK(out.values.minCoeff() >= 0.0);
    CHECK(out.values.maxCoeff() <= 1.0);
  }
}

TEST_CASE("make_windows: T=10, w=6 gives 5 samples ending at 5..9") {
  Matrix m(1, 10);
  for (Index i = 0; i < 10; ++i) m(0, i) = static_cast<double>(i);
  WindowSpec spec{6, 2, 1};
  const auto w = make_windows(series_from(m), spec);
  REQUIRE(w.size() == 5);
  for (Index i = 0; i < 5; ++i) CHECK(w[static_cast<std::size_t>(i)].end_tick == 5 + i);

  spec.stride = 10 - 6 + 1;
  CHECK(make_windows(series_from(m), spec).size() == 1);
  spec = {11, 2, 1};
  CHECK_THROWS_AS(make_windows(series_from(m), spec), std::invalid_argument);
}

TEST_CASE("make_windows: w=30, p=5 context and suspect ranges") {
  Matrix m(1, 40);
  for (Index i = 0; i < 40; ++i) m(0, i) = static_cast<double>(i);
  const auto w = make_windows(series_from(m), WindowSpec{30, 5, 1});
  const WindowSample& s = w.back();  // t = 39
  CHECK(s.end_tick == 39);
  CHECK(s.context.cols() == 25);
  CHECK(s.context(0, 0) == 10.0);   // t - 29
  CHECK(s.context(0, 24) == 34.0);  // t - 5
  CHECK(s.suspect(0, 0) == 15.0);   // t - 24
  CHECK(s.suspect(0, 24) == 39.0);  // t
  // Overlap: ticks 15..34.
  CHECK(s.suspect(0, 0) - s.context(0, 0) == 5.0);
}

TEST_CASE("WindowSpec::validate bounds") {
  CHECK_NOTHROW((WindowSpec{2, 1, 1}).validate());
  CHECK_THROWS_AS((WindowSpec{5, 5, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((WindowSpec{5, 0, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((WindowSpec{5, 1, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((WindowSpec{1, 1, 1}).validate(), std::invalid_argument);
}

TEST_CASE("property: windows reproduce the series slices they claim") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(3));
    const Index w = 2 + static_cast<Index>(rng.below(20));
    const Index p = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(w - 1)));
    const Index stride = 1 + static_cast<Index>(rng.below(5));
    const Index t_len = w + static_cast<Index>(rng.below(30));
    const TimeSeries s = series_from(rng.normal_matrix(n, t_len));
    const WindowSpec spec{w, p, stride};
    const Index c = w - p;
    const auto windows = make_windows(s, spec);
    CHECK(static_cast<Index>(windows.size()) == (t_len - w) / stride + 1);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const WindowSample& ws = windows[i];
      CHECK(ws.end_tick == w - 1 + static_cast<Index>(i) * stride);
      CHECK(ws.context.rows() == n);
      CHECK(ws.context.cols() == c);
      CHECK(ws.suspect.cols() == c);
      CHECK(ws.suspect.col(c - 1) == s.values.col(ws.end_tick));
      CHECK(ws.context == s.values.middleCols(ws.end_tick - w + 1, c));
      CHECK(ws.suspect == s.values.middleCols(ws.end_tick - c + 1, c));
      // Shared ticks agree in both views.
      if (p < c) CHECK(ws.context.rightCols(c - p) == ws.suspect.leftCols(c - p));
    }
  }
}

TEST_CASE("stack_suspects lays samples side by side") {
  Rng rng(4);
  const TimeSeries s = series_from(rng.normal_matrix(2, 20));
  const auto windows = make_windows(s, WindowSpec{8, 3, 2});
  const Matrix stacked = stack_suspects(windows);
  CHECK(stacked.cols() == 5 * static_cast<Index>(windows.size()));
  CHECK(stacked.middleCols(5, 5) == windows[1].suspect);
  CHECK(stack_contexts(windows).middleCols(10, 5) == windows[2].context);
}

TEST_CASE("TimeSeries::validate") {
  TimeSeries s = series_from(Matrix::Ones(1, 3));
  CHECK_NOTHROW(s.validate());
  s.labels = std::vector<int>{0, 1};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.labels = std::vector<int>{0, 2, 0};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.labels.reset();
  s.values(0, 1) = NAN;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
