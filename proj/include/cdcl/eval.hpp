#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cdcl/data.hpp"
#include "cdcl/model.hpp"

namespace cdcl {

/// Per-tick anomaly scores aligned to a test series. Ticks before
/// `first_scored_tick` carry the first computed score.
struct ScoreSeries {
  std::vector<double> scores;
  Index first_scored_tick = 0;
};

/// Scores every window (stride 1) in eval mode and assigns each score to the
/// window's end tick.
ScoreSeries score_series(Model& model, const TimeSeries& test, const WindowSpec& spec);

/// Point adjustment: every maximal run of label 1s that contains at least one
/// predicted 1 is predicted 1 throughout.
std::vector<int> point_adjust(std::span<const int> predictions, std::span<const int> labels);

/// Maximal runs of label 1s as [begin, end) tick ranges.
struct Segment {
  Index begin = 0;
  Index end = 0;
};
std::vector<Segment> label_segments(std::span<const int> labels);

struct SegmentDetection {
  Segment segment;
  bool detected = false;
  /// First tick in the segment flagged at the chosen threshold, or -1.
  Index first_detection = -1;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold = 0.0;
  double roc_auc = 0.0;
  bool point_adjusted = false;
  Index true_positives = 0;
  Index false_positives = 0;
  Index false_negatives = 0;
  std::vector<SegmentDetection> segments;
};

/// Metrics at one threshold of one sweep.
struct SweepRow {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// F1 from confusion counts: 2PR / (P + R), 0 when P + R = 0.
double f1_score(Index true_positives, Index false_positives, Index false_negatives);

/// Sweeps every distinct score as a threshold (predict score >= threshold),
/// optionally point-adjusting, and returns the best-F1 report (ties go to the
/// smallest threshold). ROC-AUC is filled from the raw scores. When `sweep` is
/// non-null it receives one row per threshold in ascending order.
/// Throws std::invalid_argument unless labels contain both classes.
EvalReport best_f1_search(std::span<const double> scores, std::span<const int> labels,
                          bool adjust, std::vector<SweepRow>* sweep = nullptr);

/// Rank-based ROC-AUC with midranks for ties.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Flat `key = value` report.
void write_report(const std::filesystem::path& path, const EvalReport& report);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);
void write_scores_csv(const std::filesystem::path& path, const ScoreSeries& scores);
ScoreSeries read_scores_csv(const std::filesystem::path& path);

}  // namespace cdcl
