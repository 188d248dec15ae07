#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace tsad::dataio {

using Labels = std::vector<std::uint8_t>;

/// T x D multivariate series, row-major (one row per time step).
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  SeriesMatrix(std::size_t steps, std::size_t features, std::vector<double> values, double dt_minutes = 3.0,
               std::optional<Labels> labels = std::nullopt);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t features() const noexcept { return features_; }
  double dt_minutes() const noexcept { return dt_minutes_; }

  double at(std::size_t t, std::size_t d) const { return values_[t * features_ + d]; }
  double& at(std::size_t t, std::size_t d) { return values_[t * features_ + d]; }
  std::span<const double> row(std::size_t t) const { return {values_.data() + t * features_, features_}; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::optional<Labels>& labels() const noexcept { return labels_; }
  /// Labels, or all zeros when absent.
  Labels labels_or_zero() const;
  void set_labels(std::optional<Labels> labels);

 private:
  std::size_t steps_ = 0;
  std::size_t features_ = 0;
  std::vector<double> values_;
  double dt_minutes_ = 3.0;
  std::optional<Labels> labels_;
};

/// One simulated plant trajectory. fault_id 0 means fault-free.
struct RunRecord {
  std::uint32_t run_id = 0;
  int fault_id = 0;
  SeriesMatrix series;
};

struct DatasetSplit {
  std::vector<RunRecord> train;
  std::vector<RunRecord> validation;
  std::vector<RunRecord> test;
};

/// Separates floor(n / 4) (at least one) of the fault-free runs, taken from
/// the end, as validation. Requires n >= 2.
DatasetSplit make_split(std::vector<RunRecord> fault_free, std::vector<RunRecord> test);

/// Partitions runs by fault_id == 0.
std::pair<std::vector<RunRecord>, std::vector<RunRecord>> partition_fault_free(std::vector<RunRecord> runs);

void validate_run(const RunRecord& run);

}  // namespace tsad::dataio
