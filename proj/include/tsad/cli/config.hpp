#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsad/benchproto/protocol.hpp"
#include "tsad/dataio/csv.hpp"
#include "tsad/dataio/synth.hpp"
#include "tsad/detectors/detector.hpp"

namespace tsad::cli {

struct SynthSettings {
  std::size_t normal_runs = 8;
  std::size_t fault_runs = 20;
  std::size_t steps = 400;
  std::size_t features = 8;
  dataio::FaultKind fault_kind = dataio::FaultKind::Step;
  std::size_t fault_onset = 200;
  double fault_magnitude = 5.0;
};

using GridCandidates = std::vector<std::pair<std::string, std::vector<double>>>;

/// Everything a command may need. Filled from an INI file, then overridden
/// by command-line flags.
///
///   [run]       seed, budget_seconds, out, detectors (comma list or "all")
///   [data]      path, default_fault_onset, dt_minutes
///   [synth]     normal_runs, fault_runs, steps, features, fault_kind,
///               fault_onset, fault_magnitude
///   [protocol]  folds, radius
///   [detector]  hyperparameter = value, applied to every detector
///   [detector:<id>]  same, for one detector
///   [grid]      hyperparameter = v1, v2, ...
///   [grid:<id>] same, for one detector; replaces matching [grid] keys
struct RunConfig {
  std::optional<std::uint64_t> seed;
  double budget_seconds = 60.0;
  std::filesystem::path out = ".";
  std::vector<detectors::Variant> detectors;
  std::optional<std::filesystem::path> data_path;
  dataio::CsvSchema schema;
  SynthSettings synth;
  std::size_t folds = 5;
  std::size_t radius = 1;
  benchproto::Config detector_overrides;
  std::map<detectors::Variant, benchproto::Config> variant_overrides;
  GridCandidates grid;
  std::map<detectors::Variant, GridCandidates> variant_grid;

  /// Seed, or ConfigError when neither the file nor a flag provided one.
  std::uint64_t required_seed() const;
  /// Configured detectors, or the whole registry when none were named.
  std::vector<detectors::Variant> detectors_or_all() const;
  detectors::DetectorSpec spec_for(detectors::Variant v) const;
  benchproto::GridSpec grid_for(detectors::Variant v) const;
};

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

/// "a,b,c" of registry ids or display names; "all" selects every detector.
std::vector<detectors::Variant> parse_detector_list(const std::string& text);

/// Synthetic dataset: fault-free runs get ids 0.., faulty runs follow.
std::vector<dataio::RunRecord> generate_dataset(const SynthSettings& synth, std::uint64_t seed);

}  // namespace tsad::cli
