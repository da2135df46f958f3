#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcl/types.hpp"

namespace cdcl {

/// Thrown for malformed input files; the message names the row.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N channels x T ticks of readings, with optional per-tick 0/1 labels.
struct TimeSeries {
  Matrix values;
  std::optional<std::vector<int>> labels;
  std::vector<std::string> channel_names;

  [[nodiscard]] Index channels() const { return values.rows(); }
  [[nodiscard]] Index ticks() const { return values.cols(); }
  /// Throws std::invalid_argument on non-finite values or bad labels.
  void validate() const;
};

struct WindowSpec {
  Index window_length = 30;
  Index suspect_offset = 5;
  Index stride = 1;

  /// Length c = w - p shared by the context and suspect sequences.
  [[nodiscard]] Index sub_length() const { return window_length - suspect_offset; }
  void validate() const;
};

/// One sliding-window sample ending at `end_tick`.
///   context: ticks [t - w + 1, t - p]
///   suspect: ticks [t - c + 1, t]
struct WindowSample {
  Index end_tick = 0;
  Matrix context;
  Matrix suspect;
};

struct NormalizationStats {
  Vector min;
  Vector max;
};

/// Reads a CSV with a header row, one tick per row. With `has_labels` the
/// last column must be named "label" and hold 0/1 integers.
TimeSeries load_csv(const std::filesystem::path& path, bool has_labels);
/// True when the header row's last column is named "label".
bool csv_has_label_column(const std::filesystem::path& path);
/// Inverse of load_csv. Values are written with round-trip precision.
void write_csv(const std::filesystem::path& path, const TimeSeries& series);

NormalizationStats fit_normalizer(const TimeSeries& train);
/// (x - min) / (max - min) per channel; degenerate channels map to 0. Test
/// values outside the training range are not clipped.
TimeSeries apply_normalizer(const NormalizationStats& stats, const TimeSeries& series);

std::vector<WindowSample> make_windows(const TimeSeries& series, const WindowSpec& spec);

/// Concatenates the suspect (or context) sequences of `samples` side by side:
/// N x (B * c), sample b occupying columns [b*c, (b+1)*c).
Matrix stack_suspects(std::span<const WindowSample> samples);
Matrix stack_contexts(std::span<const WindowSample> samples);

}  // namespace cdcl
