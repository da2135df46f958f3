#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cdcl/data.hpp"

namespace cdcl {

enum class AnomalyType { global_point, contextual_point, shapelet, seasonal, trend };

inline constexpr std::array<AnomalyType, 5> kAllAnomalyTypes = {
    AnomalyType::global_point, AnomalyType::contextual_point, AnomalyType::shapelet,
    AnomalyType::seasonal, AnomalyType::trend};

std::string_view to_string(AnomalyType type);
[[nodiscard]] constexpr bool is_point_type(AnomalyType t) {
  return t == AnomalyType::global_point || t == AnomalyType::contextual_point;
}

/// Univariate sine-plus-noise generator settings. Anomalies go into the test
/// part only; `weights` are indexed like kAllAnomalyTypes.
struct SynthSpec {
  Index train_length = 2000;
  Index test_length = 1000;
  double period = 40.0;
  double amplitude = 1.0;
  double noise_std = 0.05;
  double anomaly_ratio = 0.0274;
  std::array<double, 5> weights = {1.0, 1.0, 0.0, 0.0, 0.0};
  std::uint64_t seed = 0;

  /// Injected anomalies keep at least this many clean ticks between them.
  Index min_gap = 10;
  /// No anomaly starts before this test tick.
  Index edge_margin = 30;
  /// Interval length of shapelet, seasonal and trend anomalies.
  Index interval_length = 40;
  /// Global points land this far (in amplitudes) beyond the clean range.
  double global_shift = 0.5;
  /// Contextual points move at least this far (in amplitudes).
  double contextual_shift = 0.8;
  double contextual_factor = 3.0;
  Index local_radius = 2;
  double seasonal_factor = 2.0;
  /// Trend slope in amplitudes per tick.
  double trend_slope = 0.02;

  [[nodiscard]] double& weight(AnomalyType t) { return weights[static_cast<std::size_t>(t)]; }
  [[nodiscard]] double weight(AnomalyType t) const { return weights[static_cast<std::size_t>(t)]; }
  void validate() const;
};

struct SynthData {
  TimeSeries train;
  TimeSeries test;
};

/// Base signal amplitude * sin(2 pi t / period) plus N(0, noise_std) noise;
/// test ticks continue the train clock. Pure function of `spec`.
SynthData generate(const SynthSpec& spec);

/// Clean base values at absolute ticks [0, train_length + test_length).
std::vector<double> clean_base(const SynthSpec& spec);

/// Number of anomalous ticks the spec asks for: ceil(ratio * test_length).
Index anomaly_tick_budget(const SynthSpec& spec);

struct ValueRange {
  double min = 0.0;
  double max = 0.0;
};

struct Interval {
  Index begin = 0;
  Index end = 0;  // exclusive
};

/// Every injector edits `x` in place and sets labels to 1 on the touched ticks.
/// Throws std::out_of_range for positions outside `x` and
/// std::invalid_argument when a position is already labeled.

/// Moves x[t] to `range.max + shift` (or `range.min - shift` when !above).
void inject_global_point(std::span<double> x, std::span<int> labels, Index t, double shift,
                         bool above, ValueRange range);

/// Moves x[t] toward the middle of `range` by max(min_shift, factor * s), s
/// being the standard deviation of the `radius` neighbours on each side, and
/// clamps the result into `range`.
void inject_contextual_point(std::span<double> x, std::span<int> labels, Index t,
                             double min_shift, double factor, Index radius, ValueRange range);

/// Replaces the sine over the interval with a square wave of the same period
/// and amplitude, keeping the noise. `phase` is the base phase at iv.begin.
void inject_shapelet(std::span<double> x, std::span<int> labels, Interval iv, double amplitude,
                     double period, double phase);

/// Re-renders the sine over the interval at `factor` times the base
/// frequency, keeping the noise. Throws std::invalid_argument for factor 1
/// or a non-positive factor.
void inject_seasonal(std::span<double> x, std::span<int> labels, Interval iv, double amplitude,
                     double period, double phase, double factor);

/// Adds slope * (i + 1) at the i-th tick of the interval. Throws
/// std::invalid_argument for slope 0.
void inject_trend(std::span<double> x, std::span<int> labels, Interval iv, double slope);

}  // namespace cdcl
