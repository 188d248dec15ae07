#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tsad::evalkit {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept;
  bool operator==(const ConfusionCounts&) const = default;
};

/// A step is predicted anomalous iff score > threshold.
ConfusionCounts confusion(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold);

/// 2 tp / (2 tp + fn + fp), or 0 when the denominator is 0.
double f1(const ConfusionCounts& counts);
double precision(const ConfusionCounts& counts);
double recall(const ConfusionCounts& counts);

struct BestF1 {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Best F1 over every distinct-score cut plus both extremes. Tied scores
/// move together. The reported threshold is the midpoint between the two
/// distinct scores bracketing the cut; ties go to the higher threshold.
BestF1 best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  /// Block score: the point predicts every step scoring >= this value.
  double threshold = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // descending threshold, recall non-decreasing
};

PRCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// Average-precision sum: sum_k precision_k * (recall_k - recall_{k-1}).
double auprc(const PRCurve& curve);

struct MetricReport {
  double best_f1 = 0.0;
  double best_threshold = 0.0;
  double auprc = 0.0;
};

MetricReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Micro-aggregation across runs: all steps of all runs are pooled before
/// counting, so one threshold and one set of totals cover every run.
MetricReport evaluate_runs(const std::vector<std::vector<double>>& scores,
                           const std::vector<std::vector<std::uint8_t>>& labels);

}  // namespace tsad::evalkit
