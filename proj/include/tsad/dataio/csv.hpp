#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsad/dataio/series.hpp"

namespace tsad::dataio {

/// Column roles in a run-table CSV. Every column not named here is a feature.
struct CsvSchema {
  std::string fault_column = "fault_id";
  std::string run_column = "run_id";
  std::string time_column = "timestep";
  /// Optional explicit 0/1 labels; when present they win over onsets.
  std::string label_column = "label";
  /// Optional per-row onset index (time step at which the fault starts).
  std::string onset_column = "fault_onset";
  /// Used for faulty runs with neither a label nor an onset column.
  /// Without it such runs are labelled anomalous over their whole length.
  std::optional<std::size_t> default_fault_onset;
  double dt_minutes = 3.0;
};

/// Parses a run table. Rows are grouped by (fault_id, run_id) and returned
/// in that order; within a run timesteps must strictly increase. All runs
/// must have the same length.
std::vector<RunRecord> load_runs_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
std::vector<RunRecord> read_runs_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes `fault_id,run_id,timestep,label,x1..xD` with shortest round-trip
/// formatting, so reading the file back reproduces the values bit for bit.
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);
void save_runs_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs);

}  // namespace tsad::dataio
