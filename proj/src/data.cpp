#include "cdcl/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>

namespace cdcl {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                     ": not a finite number: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

void TimeSeries::validate() const {
  if (channels() < 1 || ticks() < 1) throw std::invalid_argument("time series is empty");
  if (!values.allFinite()) throw std::invalid_argument("time series has non-finite values");
  if (labels) {
    if (static_cast<Index>(labels->size()) != ticks())
      throw std::invalid_argument("labels length differs from tick count");
    for (int l : *labels)
      if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

void WindowSpec::validate() const {
  if (window_length < 2) throw std::invalid_argument("window_length: must be >= 2");
  if (suspect_offset < 1 || suspect_offset >= window_length)
    throw std::invalid_argument("suspect_offset: must satisfy 1 <= p < window_length");
  if (stride < 1) throw std::invalid_argument("stride: must be >= 1");
}

bool csv_has_label_column(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' has no header row");
  const auto fields = split_fields(line);
  return fields.size() >= 2 && trim(fields.back()) == "label";
}

TimeSeries load_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' has no header row");
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(trim(f));
  const std::size_t columns = header.size();
  if (has_labels && (columns < 2 || header.back() != "label"))
    throw ParseError("row 1: expected a final 'label' column after at least one channel");
  const std::size_t channels = has_labels ? columns - 1 : columns;
  if (channels == 0) throw ParseError("row 1: no channel columns");

  std::vector<double> flat;  // tick-major
  std::vector<int> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(columns) +
                       " cells, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < channels; ++c) flat.push_back(parse_double(fields[c], row, c));
    if (has_labels) {
      const std::string_view cell = trim(fields.back());
      if (cell != "0" && cell != "1")
        throw ParseError("row " + std::to_string(row) + ": label must be 0 or 1, got '" +
                         std::string(cell) + "'");
      labels.push_back(cell == "1" ? 1 : 0);
    }
  }
  const auto ticks = static_cast<Index>(flat.size() / channels);
  if (ticks == 0) throw ParseError("'" + path.string() + "' has no data rows");

  TimeSeries series;
  series.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::ColMajor>>(
      flat.data(), static_cast<Index>(channels), ticks);
  series.channel_names.assign(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(channels));
  if (has_labels) series.labels = std::move(labels);
  return series;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (Index c = 0; c < series.channels(); ++c) {
    if (c > 0) out << ',';
    if (static_cast<Index>(series.channel_names.size()) == series.channels())
      out << series.channel_names[static_cast<std::size_t>(c)];
    else
      out << "value" << c;
  }
  if (series.labels) out << ",label";
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index t = 0; t < series.ticks(); ++t) {
    for (Index c = 0; c < series.channels(); ++c) {
      if (c > 0) out << ',';
      out << series.values(c, t);
    }
    if (series.labels) out << ',' << (*series.labels)[static_cast<std::size_t>(t)];
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

NormalizationStats fit_normalizer(const TimeSeries& train) {
  if (train.ticks() < 1) throw std::invalid_argument("fit_normalizer: empty training series");
  return {train.values.rowwise().minCoeff(), train.values.rowwise().maxCoeff()};
}

TimeSeries apply_normalizer(const NormalizationStats& stats, const TimeSeries& series) {
  if (stats.min.size() != series.channels())
    throw std::invalid_argument("apply_normalizer: channel count differs from fitted stats");
  TimeSeries out = series;
  for (Index c = 0; c < series.channels(); ++c) {
    const double range = stats.max(c) - stats.min(c);
    if (range > 0.0)
      out.values.row(c) = (series.values.row(c).array() - stats.min(c)) / range;
    else
      out.values.row(c).setZero();
  }
  return out;
}

std::vector<WindowSample> make_windows(const TimeSeries& series, const WindowSpec& spec) {
  spec.validate();
  const Index w = spec.window_length;
  const Index c = spec.sub_length();
  if (series.ticks() < w) {
    throw std::invalid_argument("make_windows: series has " + std::to_string(series.ticks()) +
                                " ticks, window needs " + std::to_string(w));
  }
  std::vector<WindowSample> samples;
  samples.reserve(static_cast<std::size_t>((series.ticks() - w) / spec.stride + 1));
  for (Index t = w - 1; t < series.ticks(); t += spec.stride) {
    WindowSample s;
    s.end_tick = t;
    s.context = series.values.middleCols(t - w + 1, c);
    s.suspect = series.values.middleCols(t - c + 1, c);
    samples.push_back(std::move(s));
  }
  return samples;
}

namespace {

template <typename Pick>
Matrix stack(std::span<const WindowSample> samples, Pick pick) {
  if (samples.empty()) throw std::invalid_argument("stack: no samples");
  const Matrix& first = pick(samples.front());
  const Index c = first.cols();
  Matrix out(first.rows(), c * static_cast<Index>(samples.size()));
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const Matrix& m = pick(samples[b]);
    if (m.rows() != first.rows() || m.cols() != c)
      throw std::invalid_argument("stack: samples have different shapes");
    out.middleCols(static_cast<Index>(b) * c, c) = m;
  }
  return out;
}

}  // namespace

Matrix stack_suspects(std::span<const WindowSample> samples) {
  return stack(samples, [](const WindowSample& s) -> const Matrix& { return s.suspect; });
}

Matrix stack_contexts(std::span<const WindowSample> samples) {
  return stack(samples, [](const WindowSample& s) -> const Matrix& { return s.context; });
}

}  // namespace cdcl
