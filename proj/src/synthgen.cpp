#include "cdcl/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cdcl/random.hpp"

namespace cdcl {

std::string_view to_string(AnomalyType type) {
  switch (type) {
    case AnomalyType::global_point: return "global_point";
    case AnomalyType::contextual_point: return "contextual_point";
    case AnomalyType::shapelet: return "shapelet";
    case AnomalyType::seasonal: return "seasonal";
    case AnomalyType::trend: return "trend";
  }
  return "unknown";
}

void SynthSpec::validate() const {
  if (train_length < 1) throw std::invalid_argument("train_length: must be >= 1");
  if (test_length < 1) throw std::invalid_argument("test_length: must be >= 1");
  if (!(period > 0.0) || !std::isfinite(period)) throw std::invalid_argument("period: must be > 0");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("amplitude: must be finite");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::invalid_argument("noise_std: must be >= 0");
  if (!(anomaly_ratio >= 0.0 && anomaly_ratio < 1.0))
    throw std::invalid_argument("anomaly_ratio: must be in [0, 1)");
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("weight." + std::string(to_string(kAllAnomalyTypes[i])) +
                                  ": must be >= 0");
    total += weights[i];
  }
  if (anomaly_ratio > 0.0 && total <= 0.0)
    throw std::invalid_argument("weights: at least one must be > 0 when anomaly_ratio > 0");
  if (min_gap < 0) throw std::invalid_argument("min_gap: must be >= 0");
  if (edge_margin < 0 || edge_margin >= test_length)
    throw std::invalid_argument("edge_margin: must be in [0, test_length)");
  if (interval_length < 1) throw std::invalid_argument("interval_length: must be >= 1");
  if (!(global_shift > 0.0)) throw std::invalid_argument("global_shift: must be > 0");
  if (!(contextual_shift > 0.0)) throw std::invalid_argument("contextual_shift: must be > 0");
  if (!(contextual_factor >= 0.0)) throw std::invalid_argument("contextual_factor: must be >= 0");
  if (local_radius < 1) throw std::invalid_argument("local_radius: must be >= 1");
  if (!(seasonal_factor > 0.0) || seasonal_factor == 1.0)
    throw std::invalid_argument("seasonal_factor: must be > 0 and != 1");
  if (trend_slope == 0.0 || !std::isfinite(trend_slope))
    throw std::invalid_argument("trend_slope: must be nonzero");
}

namespace {

void check_position(std::span<const int> labels, Index t) {
  if (t < 0 || t >= static_cast<Index>(labels.size()))
    throw std::out_of_range("tick " + std::to_string(t) + " outside series of length " +
                            std::to_string(labels.size()));
  if (labels[static_cast<std::size_t>(t)] != 0)
    throw std::invalid_argument("tick " + std::to_string(t) + " overlaps an existing anomaly");
}

void check_interval(std::span<const double> x, std::span<const int> labels, Interval iv) {
  if (x.size() != labels.size()) throw std::invalid_argument("series and labels differ in length");
  if (iv.begin < 0 || iv.end > static_cast<Index>(x.size()) || iv.begin >= iv.end)
    throw std::out_of_range("interval [" + std::to_string(iv.begin) + ", " +
                            std::to_string(iv.end) + ") outside series of length " +
                            std::to_string(x.size()));
  for (Index t = iv.begin; t < iv.end; ++t) check_position(labels, t);
}

/// Swaps the base sine for `shape(phase)` while keeping each tick's noise.
template <typename Shape>
void rerender(std::span<double> x, std::span<int> labels, Interval iv, double amplitude,
              double period, double phase, Shape shape) {
  check_interval(x, labels, iv);
  const double step = 2.0 * std::numbers::pi / period;
  for (Index t = iv.begin; t < iv.end; ++t) {
    const double theta = phase + step * static_cast<double>(t - iv.begin);
    auto& v = x[static_cast<std::size_t>(t)];
    v = v - amplitude * std::sin(theta) + amplitude * shape(theta, static_cast<double>(t - iv.begin));
    labels[static_cast<std::size_t>(t)] = 1;
  }
}

}  // namespace

void inject_global_point(std::span<double> x, std::span<int> labels, Index t, double shift,
                         bool above, ValueRange range) {
  if (x.size() != labels.size()) throw std::invalid_argument("series and labels differ in length");
  if (!(shift > 0.0)) throw std::invalid_argument("global shift: must be > 0");
  check_position(labels, t);
  x[static_cast<std::size_t>(t)] = above ? range.max + shift : range.min - shift;
  labels[static_cast<std::size_t>(t)] = 1;
}

void inject_contextual_point(std::span<double> x, std::span<int> labels, Index t,
                             double min_shift, double factor, Index radius, ValueRange range) {
  if (x.size() != labels.size()) throw std::invalid_argument("series and labels differ in length");
  if (!(min_shift > 0.0)) throw std::invalid_argument("contextual shift: must be > 0");
  if (radius < 1) throw std::invalid_argument("local radius: must be >= 1");
  check_position(labels, t);
  const auto n = static_cast<Index>(x.size());
  double sum = 0.0, sq = 0.0;
  int count = 0;
  for (Index s = std::max<Index>(0, t - radius); s <= std::min(n - 1, t + radius); ++s) {
    if (s == t) continue;
    sum += x[static_cast<std::size_t>(s)];
    sq += x[static_cast<std::size_t>(s)] * x[static_cast<std::size_t>(s)];
    ++count;
  }
  double local_std = 0.0;
  if (count > 1) {
    const double mean = sum / count;
    local_std = std::sqrt(std::max(0.0, (sq - count * mean * mean) / (count - 1)));
  }
  const double magnitude = std::max(min_shift, factor * local_std);
  const double centre = 0.5 * (range.min + range.max);
  auto& v = x[static_cast<std::size_t>(t)];
  const double direction = v > centre ? -1.0 : 1.0;
  v = std::clamp(v + direction * magnitude, range.min, range.max);
  labels[static_cast<std::size_t>(t)] = 1;
}

void inject_shapelet(std::span<double> x, std::span<int> labels, Interval iv, double amplitude,
                     double period, double phase) {
  rerender(x, labels, iv, amplitude, period, phase,
           [](double theta, double) { return std::sin(theta) >= 0.0 ? 1.0 : -1.0; });
}

void inject_seasonal(std::span<double> x, std::span<int> labels, Interval iv, double amplitude,
                     double period, double phase, double factor) {
  if (!(factor > 0.0) || factor == 1.0)
    throw std::invalid_argument("seasonal factor: must be > 0 and != 1");
  const double step = 2.0 * std::numbers::pi / period;
  rerender(x, labels, iv, amplitude, period, phase,
           [&](double, double i) { return std::sin(phase + factor * step * i); });
}

void inject_trend(std::span<double> x, std::span<int> labels, Interval iv, double slope) {
  if (slope == 0.0 || !std::isfinite(slope))
    throw std::invalid_argument("trend slope: must be nonzero");
  check_interval(x, labels, iv);
  for (Index t = iv.begin; t < iv.end; ++t) {
    x[static_cast<std::size_t>(t)] += slope * static_cast<double>(t - iv.begin + 1);
    labels[static_cast<std::size_t>(t)] = 1;
  }
}

std::vector<double> clean_base(const SynthSpec& spec) {
  spec.validate();
  const Index total = spec.train_length + spec.test_length;
  Rng noise(mix_seed(spec.seed, 1));
  std::vector<double> x(static_cast<std::size_t>(total));
  for (Index t = 0; t < total; ++t)
    x[static_cast<std::size_t>(t)] =
        spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period) +
        noise.normal(0.0, spec.noise_std);
  return x;
}

Index anomaly_tick_budget(const SynthSpec& spec) {
  // 0.03 * 100 evaluates to 3.0000000000000004; keep that at 3.
  const double raw = spec.anomaly_ratio * static_cast<double>(spec.test_length);
  return static_cast<Index>(std::ceil(raw - 1e-9));
}

namespace {

/// Largest-remainder split of `total` ticks over the positive weights.
std::array<Index, 5> allocate(const SynthSpec& spec, Index total) {
  double sum = 0.0;
  for (double w : spec.weights) sum += w;
  std::array<Index, 5> out{};
  std::array<double, 5> remainder{};
  Index assigned = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double share = static_cast<double>(total) * spec.weights[i] / sum;
    out[i] = static_cast<Index>(std::floor(share));
    remainder[i] = share - static_cast<double>(out[i]);
    assigned += out[i];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 5; ++i)
      if (remainder[i] > remainder[best]) best = i;
    ++out[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  return out;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const std::vector<double> base = clean_base(spec);
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  const ValueRange range{*lo, *hi};

  std::vector<double> test(base.begin() + spec.train_length, base.end());
  std::vector<int> labels(test.size(), 0);

  struct Item {
    AnomalyType type;
    Index length;
  };
  std::vector<Item> items;
  const auto counts = allocate(spec, anomaly_tick_budget(spec));
  for (std::size_t i = 0; i < 5; ++i) {
    const AnomalyType type = kAllAnomalyTypes[i];
    if (counts[i] == 0) continue;
    if (is_point_type(type)) {
      for (Index k = 0; k < counts[i]; ++k) items.push_back({type, 1});
    } else {
      const Index n = (counts[i] + spec.interval_length - 1) / spec.interval_length;
      for (Index k = 0; k < n; ++k) items.push_back({type, spec.interval_length});
    }
  }
  // Long items first so they still find room.
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) { return a.length > b.length; });

  Rng rng(mix_seed(spec.seed, 2));
  std::vector<char> blocked(test.size(), 0);
  const Index n = spec.test_length;
  for (const Item& item : items) {
    const Index span = n - spec.edge_margin - item.length + 1;
    if (span < 1) throw std::invalid_argument("test_length: too short for the requested anomalies");
    Index start = -1;
    for (int attempt = 0; attempt < 10000 && start < 0; ++attempt) {
      const Index s = spec.edge_margin + static_cast<Index>(rng.below(static_cast<std::uint64_t>(span)));
      bool free = true;
      for (Index t = std::max<Index>(0, s - spec.min_gap);
           t < std::min(n, s + item.length + spec.min_gap) && free; ++t)
        free = blocked[static_cast<std::size_t>(t)] == 0;
      if (free) start = s;
    }
    if (start < 0)
      throw std::invalid_argument("anomaly_ratio: cannot place " + std::to_string(items.size()) +
                                  " anomalies with min_gap " + std::to_string(spec.min_gap));
    std::fill(blocked.begin() + start, blocked.begin() + start + item.length, 1);

    const Interval iv{start, start + item.length};
    const double phase =
        2.0 * std::numbers::pi * static_cast<double>(spec.train_length + start) / spec.period;
    switch (item.type) {
      case AnomalyType::global_point:
        inject_global_point(test, labels, start, spec.global_shift * std::abs(spec.amplitude),
                            rng.uniform() < 0.5, range);
        break;
      case AnomalyType::contextual_point:
        inject_contextual_point(test, labels, start,
                                spec.contextual_shift * std::abs(spec.amplitude),
                                spec.contextual_factor, spec.local_radius, range);
        break;
      case AnomalyType::shapelet:
        inject_shapelet(test, labels, iv, spec.amplitude, spec.period, phase);
        break;
      case AnomalyType::seasonal:
        inject_seasonal(test, labels, iv, spec.amplitude, spec.period, phase,
                        spec.seasonal_factor);
        break;
      case AnomalyType::trend:
        inject_trend(test, labels, iv, spec.trend_slope * std::abs(spec.amplitude));
        break;
    }
  }

  SynthData out;
  out.train.values = Eigen::Map<const RowVector>(base.data(), spec.train_length);
  out.train.channel_names = {"value"};
  out.test.values = Eigen::Map<const RowVector>(test.data(), spec.test_length);
  out.test.labels = std::move(labels);
  out.test.channel_names = {"value"};
  return out;
}

}  // namespace cdcl
