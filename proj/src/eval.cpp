#include "cdcl/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cdcl {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
}

void require_both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1) pos = true;
    else if (l == 0) neg = true;
    else throw std::invalid_argument("labels must be 0 or 1");
  }
  if (!pos || !neg)
    throw std::invalid_argument("degenerate labels: need at least one anomalous and one normal tick");
}

}  // namespace

ScoreSeries score_series(Model& model, const TimeSeries& test, const WindowSpec& spec) {
  WindowSpec every_tick = spec;
  every_tick.stride = 1;
  const auto windows = make_windows(test, every_tick);
  ScoreSeries out;
  out.scores.resize(static_cast<std::size_t>(test.ticks()));
  out.first_scored_tick = windows.front().end_tick;
  for (const WindowSample& w : windows)
    out.scores[static_cast<std::size_t>(w.end_tick)] = model.score(w);
  const double lead = out.scores[static_cast<std::size_t>(out.first_scored_tick)];
  std::fill(out.scores.begin(), out.scores.begin() + out.first_scored_tick, lead);
  return out;
}

std::vector<Segment> label_segments(std::span<const int> labels) {
  std::vector<Segment> out;
  const auto n = static_cast<Index>(labels.size());
  for (Index t = 0; t < n;) {
    if (labels[static_cast<std::size_t>(t)] != 1) {
      ++t;
      continue;
    }
    Index end = t;
    while (end < n && labels[static_cast<std::size_t>(end)] == 1) ++end;
    out.push_back({t, end});
    t = end;
  }
  return out;
}

std::vector<int> point_adjust(std::span<const int> predictions, std::span<const int> labels) {
  require_same_length(predictions.size(), labels.size(), "point_adjust");
  std::vector<int> out(predictions.begin(), predictions.end());
  for (const Segment& s : label_segments(labels)) {
    const bool hit = std::any_of(out.begin() + s.begin, out.begin() + s.end,
                                 [](int p) { return p == 1; });
    if (hit) std::fill(out.begin() + s.begin, out.begin() + s.end, 1);
  }
  return out;
}

double f1_score(Index true_positives, Index false_positives, Index false_negatives) {
  const double tp = static_cast<double>(true_positives);
  const double precision = true_positives + false_positives > 0
                               ? tp / static_cast<double>(true_positives + false_positives)
                               : 0.0;
  const double recall = true_positives + false_negatives > 0
                            ? tp / static_cast<double>(true_positives + false_negatives)
                            : 0.0;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport best_f1_search(std::span<const double> scores, std::span<const int> labels,
                          bool adjust, std::vector<SweepRow>* sweep) {
  require_same_length(scores.size(), labels.size(), "best_f1_search");
  require_both_classes(labels);

  std::vector<double> normal_scores;
  std::vector<double> positive_scores;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (labels[i] == 1 ? positive_scores : normal_scores).push_back(scores[i]);
  std::sort(normal_scores.begin(), normal_scores.end());
  std::sort(positive_scores.begin(), positive_scores.end());
  const auto total_positive = static_cast<Index>(positive_scores.size());

  // With adjustment a segment counts in full once its maximum is flagged.
  const std::vector<Segment> segments = label_segments(labels);
  std::vector<std::pair<double, Index>> segment_max;  // (max score, length)
  for (const Segment& s : segments) {
    const double m = *std::max_element(scores.begin() + s.begin, scores.begin() + s.end);
    segment_max.emplace_back(m, s.end - s.begin);
  }
  std::sort(segment_max.begin(), segment_max.end());
  std::vector<Index> suffix_len(segment_max.size() + 1, 0);
  for (std::size_t i = segment_max.size(); i-- > 0;)
    suffix_len[i] = suffix_len[i + 1] + segment_max[i].second;

  auto count_at_least = [](const std::vector<double>& sorted, double thr) {
    return static_cast<Index>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), thr));
  };

  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  EvalReport best;
  best.point_adjusted = adjust;
  best.f1 = -1.0;
  if (sweep) sweep->clear();
  for (double thr : thresholds) {
    Index tp;
    if (adjust) {
      const auto first = std::lower_bound(segment_max.begin(), segment_max.end(),
                                          std::pair<double, Index>(thr, std::numeric_limits<Index>::min()));
      tp = suffix_len[static_cast<std::size_t>(first - segment_max.begin())];
    } else {
      tp = count_at_least(positive_scores, thr);
    }
    const Index fp = count_at_least(normal_scores, thr);
    const Index fn = total_positive - tp;
    const double f1 = f1_score(tp, fp, fn);
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_positive);
    if (sweep) sweep->push_back({thr, precision, recall, f1});
    if (f1 > best.f1) {
      best.f1 = f1;
      best.threshold = thr;
      best.precision = precision;
      best.recall = recall;
      best.true_positives = tp;
      best.false_positives = fp;
      best.false_negatives = fn;
    }
  }

  for (const Segment& s : segments) {
    SegmentDetection det{s, false, -1};
    for (Index t = s.begin; t < s.end; ++t) {
      if (scores[static_cast<std::size_t>(t)] >= best.threshold) {
        det.detected = true;
        det.first_detection = t;
        break;
      }
    }
    best.segments.push_back(det);
  }
  best.roc_auc = roc_auc(scores, labels);
  return best;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require_same_length(scores.size(), labels.size(), "roc_auc");
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        n_pos += 1.0;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  return (positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

void write_report(const std::filesystem::path& path, const EvalReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "precision = " << r.precision << '\n'
      << "recall = " << r.recall << '\n'
      << "f1 = " << r.f1 << '\n'
      << "threshold = " << r.threshold << '\n'
      << "roc_auc = " << r.roc_auc << '\n'
      << "point_adjusted = " << (r.point_adjusted ? "true" : "false") << '\n'
      << "true_positives = " << r.true_positives << '\n'
      << "false_positives = " << r.false_positives << '\n'
      << "false_negatives = " << r.false_negatives << '\n'
      << "segments = " << r.segments.size() << '\n';
  Index detected = 0;
  for (const auto& s : r.segments) detected += s.detected ? 1 : 0;
  out << "segments_detected = " << detected << '\n';
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    const auto& s = r.segments[i];
    out << "segment." << i << " = " << s.segment.begin << ' ' << s.segment.end << ' '
        << (s.detected ? 1 : 0) << ' ' << s.first_detection << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "threshold,precision,recall,f1\n";
  for (const SweepRow& r : rows)
    out << r.threshold << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
}

void write_scores_csv(const std::filesystem::path& path, const ScoreSeries& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "tick,score\n";
  for (std::size_t t = 0; t < s.scores.size(); ++t) out << t << ',' << s.scores[t] << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

ScoreSeries read_scores_csv(const std::filesystem::path& path) {
  const TimeSeries table = load_csv(path, false);
  if (table.channels() != 2 || table.channel_names.at(0) != "tick" ||
      table.channel_names.at(1) != "score")
    throw ParseError("'" + path.string() + "': expected columns tick,score");
  ScoreSeries out;
  for (Index t = 0; t < table.ticks(); ++t) {
    if (table.values(0, t) != static_cast<double>(t))
      throw ParseError("row " + std::to_string(t + 2) + ": ticks must be 0, 1, 2, ...");
    out.scores.push_back(table.values(1, t));
  }
  return out;
}

}  // namespace cdcl
