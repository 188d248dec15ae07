#include "tsad/dataio/norm.hpp"

#include <algorithm>
#include <cmath>

#include "tsad/errors.hpp"

namespace tsad::dataio {

NormStats fit_norm_stats(const std::vector<RunRecord>& train, double std_floor) {
  if (train.empty()) throw ContractError("fit_norm_stats needs at least one training run");
  if (!(std_floor > 0)) throw ContractError("std_floor must be positive");
  const std::size_t d = train.front().series.features();
  NormStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std_floor};
  std::size_t count = 0;
  for (const auto& run : train) {
    if (run.series.features() != d) throw DimensionError("training runs disagree on feature count");
    for (std::size_t t = 0; t < run.series.steps(); ++t) {
      for (std::size_t j = 0; j < d; ++j) stats.mean[j] += run.series.at(t, j);
    }
    count += run.series.steps();
  }
  for (double& m : stats.mean) m /= static_cast<double>(count);
  // second pass for numerically stable variance
  for (const auto& run : train) {
    for (std::size_t t = 0; t < run.series.steps(); ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        const double e = run.series.at(t, j) - stats.mean[j];
        stats.std[j] += e * e;
      }
    }
  }
  for (double& s : stats.std) s = std::max(std::sqrt(s / static_cast<double>(count)), std_floor);
  return stats;
}

SeriesMatrix apply_norm(const SeriesMatrix& series, const NormStats& stats) {
  const std::size_t d = series.features();
  if (stats.mean.size() != d) throw DimensionError("normalization stats do not match series width");
  std::vector<double> out(series.values().size());
  for (std::size_t t = 0; t < series.steps(); ++t) {
    for (std::size_t j = 0; j < d; ++j) out[t * d + j] = (series.at(t, j) - stats.mean[j]) / stats.std[j];
  }
  return SeriesMatrix(series.steps(), d, std::move(out), series.dt_minutes(), series.labels());
}

SeriesMatrix invert_norm(const SeriesMatrix& series, const NormStats& stats) {
  const std::size_t d = series.features();
  if (stats.mean.size() != d) throw DimensionError("normalization stats do not match series width");
  std::vector<double> out(series.values().size());
  for (std::size_t t = 0; t < series.steps(); ++t) {
    for (std::size_t j = 0; j < d; ++j) out[t * d + j] = series.at(t, j) * stats.std[j] + stats.mean[j];
  }
  return SeriesMatrix(series.steps(), d, std::move(out), series.dt_minutes(), series.labels());
}

}  // namespace tsad::dataio
