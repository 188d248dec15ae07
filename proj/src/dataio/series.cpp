#include "tsad/dataio/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsad/errors.hpp"

namespace tsad::dataio {

SeriesMatrix::SeriesMatrix(std::size_t steps, std::size_t features, std::vector<double> values, double dt_minutes,
                           std::optional<Labels> labels)
    : steps_(steps), features_(features), values_(std::move(values)), dt_minutes_(dt_minutes) {
  if (steps_ == 0 || features_ == 0) throw ContractError("series must have T >= 1 and D >= 1");
  if (values_.size() != steps_ * features_) {
    throw DimensionError("series " + std::to_string(steps_) + "x" + std::to_string(features_) + " with " +
                         std::to_string(values_.size()) + " values");
  }
  if (!(dt_minutes_ > 0)) throw ContractError("sampling interval must be positive");
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericError("series contains non-finite values");
  }
  set_labels(std::move(labels));
}

Labels SeriesMatrix::labels_or_zero() const { return labels_ ? *labels_ : Labels(steps_, 0); }

void SeriesMatrix::set_labels(std::optional<Labels> labels) {
  if (labels) {
    if (labels->size() != steps_) {
      throw DimensionError("labels length " + std::to_string(labels->size()) + " != T " + std::to_string(steps_));
    }
    if (std::any_of(labels->begin(), labels->end(), [](std::uint8_t v) { return v > 1; })) {
      throw DataError("labels must be 0 or 1");
    }
  }
  labels_ = std::move(labels);
}

void validate_run(const RunRecord& run) {
  if (run.fault_id < 0 || run.fault_id > 20) {
    throw DataError("fault_id " + std::to_string(run.fault_id) + " outside [0, 20]");
  }
  if (run.fault_id == 0 && run.series.has_labels()) {
    const auto& l = *run.series.labels();
    if (std::any_of(l.begin(), l.end(), [](std::uint8_t v) { return v != 0; })) {
      throw DataError("fault-free run " + std::to_string(run.run_id) + " carries anomaly labels");
    }
  }
}

DatasetSplit make_split(std::vector<RunRecord> fault_free, std::vector<RunRecord> test) {
  if (fault_free.size() < 2) throw ContractError("need at least two fault-free runs to carve out a validation set");
  const std::size_t n_val = std::max<std::size_t>(1, fault_free.size() / 4);
  DatasetSplit split;
  split.validation.assign(std::make_move_iterator(fault_free.end() - static_cast<std::ptrdiff_t>(n_val)),
                          std::make_move_iterator(fault_free.end()));
  fault_free.resize(fault_free.size() - n_val);
  split.train = std::move(fault_free);
  split.test = std::move(test);
  return split;
}

std::pair<std::vector<RunRecord>, std::vector<RunRecord>> partition_fault_free(std::vector<RunRecord> runs) {
  std::vector<RunRecord> clean, faulty;
  for (auto& r : runs) (r.fault_id == 0 ? clean : faulty).push_back(std::move(r));
  return {std::move(clean), std::move(faulty)};
}

}  // namespace tsad::dataio
