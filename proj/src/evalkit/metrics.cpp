#include "tsad/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tsad/errors.hpp"

namespace tsad::evalkit {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("scores (" + std::to_string(scores.size()) + ") and labels (" + std::to_string(labels.size()) +
                        ") differ in length");
  }
  for (auto l : labels) {
    if (l > 1) throw ContractError("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("scores contain NaN");
  }
}

/// Distinct scores in descending order with the positives/negatives at each.
struct Block {
  double score;
  std::size_t positives;
  std::size_t negatives;
};

std::vector<Block> descending_blocks(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Block> blocks;
  for (std::size_t i : order) {
    if (blocks.empty() || blocks.back().score != scores[i]) blocks.push_back({scores[i], 0, 0});
    (labels[i] ? blocks.back().positives : blocks.back().negatives) += 1;
  }
  const auto positives = std::accumulate(blocks.begin(), blocks.end(), std::size_t{0},
                                         [](std::size_t acc, const Block& b) { return acc + b.positives; });
  if (positives == 0) throw MetricUndefinedError("no positive labels: F1 and AUPRC are undefined");
  return blocks;
}

double cut_between(double higher, double lower) {
  const double mid = lower + 0.5 * (higher - lower);
  return (mid > lower && mid < higher) ? mid : lower;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold) {
  check_inputs(scores, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (labels[i]) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

double f1(const ConfusionCounts& c) {
  const auto denom = 2 * c.tp + c.fn + c.fp;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double precision(const ConfusionCounts& c) {
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

BestF1 best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto blocks = descending_blocks(scores, labels);
  std::size_t positives = 0;
  for (const auto& b : blocks) positives += b.positives;

  // Start from "predict nothing" (threshold at the maximum), then lower the
  // cut one block at a time. Only strict improvements replace the current
  // best, which keeps the highest threshold among ties.
  BestF1 best{blocks.front().score, 0.0};
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    tp += blocks[k].positives;
    fp += blocks[k].negatives;
    const double value = f1({tp, fp, 0, positives - tp});
    if (value > best.f1) {
      double threshold;
      if (k + 1 < blocks.size()) {
        threshold = cut_between(blocks[k].score, blocks[k + 1].score);
      } else {
        const double lo = blocks[k].score;
        threshold = lo - std::max(1.0, std::abs(lo));
      }
      best = {threshold, value};
    }
  }
  return best;
}

PRCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto blocks = descending_blocks(scores, labels);
  std::size_t positives = 0;
  for (const auto& b : blocks) positives += b.positives;
  PRCurve curve;
  std::size_t tp = 0, fp = 0;
  for (const auto& b : blocks) {
    tp += b.positives;
    fp += b.negatives;
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                            static_cast<double>(tp) / static_cast<double>(tp + fp), b.score});
  }
  return curve;
}

double auprc(const PRCurve& curve) {
  double area = 0.0, previous_recall = 0.0;
  for (const auto& p : curve.points) {
    area += p.precision * (p.recall - previous_recall);
    previous_recall = p.recall;
  }
  return area;
}

MetricReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto best = best_f1(scores, labels);
  return {best.f1, best.threshold, auprc(pr_curve(scores, labels))};
}

MetricReport evaluate_runs(const std::vector<std::vector<double>>& scores,
                           const std::vector<std::vector<std::uint8_t>>& labels) {
  if (scores.size() != labels.size()) throw ContractError("score and label run counts differ");
  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_labels;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (scores[r].size() != labels[r].size()) throw ContractError("run " + std::to_string(r) + ": length mismatch");
    all_scores.insert(all_scores.end(), scores[r].begin(), scores[r].end());
    all_labels.insert(all_labels.end(), labels[r].begin(), labels[r].end());
  }
  return evaluate(all_scores, all_labels);
}

}  // namespace tsad::evalkit
