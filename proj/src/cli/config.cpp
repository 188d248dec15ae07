#include "tsad/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tsad/errors.hpp"

namespace tsad::cli {

namespace pt = boost::property_tree;
namespace det = detectors;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

std::size_t to_count(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("'" + key + "' has no values");
  return out;
}

void put_override(benchproto::Config& config, const std::string& key, double value) {
  if (!benchproto::is_hyperparameter(key)) throw ConfigError("unknown hyperparameter '" + key + "'");
  auto it = std::find_if(config.begin(), config.end(), [&](const auto& kv) { return kv.first == key; });
  if (it != config.end()) it->second = value;
  else config.emplace_back(key, value);
}

void merge_grid(GridCandidates& grid, const std::string& key, std::vector<double> values) {
  if (!benchproto::is_hyperparameter(key)) throw ConfigError("unknown hyperparameter '" + key + "'");
  auto it = std::find_if(grid.begin(), grid.end(), [&](const auto& kv) { return kv.first == key; });
  if (it != grid.end()) it->second = std::move(values);
  else grid.emplace_back(key, std::move(values));
}

std::optional<det::Variant> scoped(const std::string& section, const std::string& prefix) {
  if (section.rfind(prefix + ":", 0) != 0) return std::nullopt;
  return det::parse_variant(section.substr(prefix.size() + 1));
}

}  // namespace

std::vector<det::Variant> parse_detector_list(const std::string& text) {
  std::vector<det::Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item == "all") {
      for (auto v : det::all_variants()) {
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
      }
      continue;
    }
    const auto v = det::parse_variant(item);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("detector list is empty");
  return out;
}

RunConfig parse_run_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      const std::string where = section + "." + key;
      if (section == "run") {
        if (key == "seed") c.seed = to_count(where, value);
        else if (key == "budget_seconds") c.budget_seconds = to_double(where, value);
        else if (key == "out") c.out = trim(value);
        else if (key == "detectors") c.detectors = parse_detector_list(value);
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "data") {
        if (key == "path") c.data_path = trim(value);
        else if (key == "default_fault_onset") c.schema.default_fault_onset = to_count(where, value);
        else if (key == "dt_minutes") c.schema.dt_minutes = to_double(where, value);
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "synth") {
        auto& s = c.synth;
        if (key == "normal_runs") s.normal_runs = to_count(where, value);
        else if (key == "fault_runs") s.fault_runs = to_count(where, value);
        else if (key == "steps") s.steps = to_count(where, value);
        else if (key == "features") s.features = to_count(where, value);
        else if (key == "fault_kind") s.fault_kind = dataio::parse_fault_kind(trim(value));
        else if (key == "fault_onset") s.fault_onset = to_count(where, value);
        else if (key == "fault_magnitude") s.fault_magnitude = to_double(where, value);
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "protocol") {
        if (key == "folds") c.folds = to_count(where, value);
        else if (key == "radius") c.radius = to_count(where, value);
        else throw ConfigError("unknown config key '" + where + "'");
      } else if (section == "detector") {
        put_override(c.detector_overrides, key, to_double(where, value));
      } else if (auto v = scoped(section, "detector")) {
        put_override(c.variant_overrides[*v], key, to_double(where, value));
      } else if (section == "grid") {
        merge_grid(c.grid, key, to_list(where, value));
      } else if (auto g = scoped(section, "grid")) {
        merge_grid(c.variant_grid[*g], key, to_list(where, value));
      } else {
        throw ConfigError("unknown config section '" + section + "'");
      }
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_run_config(in);
}

std::uint64_t RunConfig::required_seed() const {
  if (!seed) throw ConfigError("a seed is required (--seed or [run] seed)");
  return *seed;
}

std::vector<det::Variant> RunConfig::detectors_or_all() const {
  return detectors.empty() ? det::all_variants() : detectors;
}

det::DetectorSpec RunConfig::spec_for(det::Variant v) const {
  auto spec = det::default_spec(v);
  for (const auto& [key, value] : detector_overrides) benchproto::set_hyperparameter(spec, key, value);
  if (auto it = variant_overrides.find(v); it != variant_overrides.end()) {
    for (const auto& [key, value] : it->second) benchproto::set_hyperparameter(spec, key, value);
  }
  spec.seed = required_seed();
  return spec;
}

benchproto::GridSpec RunConfig::grid_for(det::Variant v) const {
  benchproto::GridSpec g;
  g.base = spec_for(v);
  g.candidates = grid;
  if (auto it = variant_grid.find(v); it != variant_grid.end()) {
    for (const auto& [key, values] : it->second) merge_grid(g.candidates, key, values);
  }
  g.budget_seconds = budget_seconds;
  return g;
}

std::vector<dataio::RunRecord> generate_dataset(const SynthSettings& synth, std::uint64_t seed) {
  dataio::SynthConfig base;
  base.steps = synth.steps;
  base.features = synth.features;
  base.seed = seed;
  base.fault_onset = synth.fault_onset;
  base.fault_magnitude = synth.fault_magnitude;
  std::vector<dataio::RunRecord> runs;
  if (synth.normal_runs > 0) {
    auto normal = base;
    normal.runs = synth.normal_runs;
    normal.fault_kind = dataio::FaultKind::None;
    runs = dataio::synth_generate(normal);
  }
  if (synth.fault_runs > 0) {
    auto faulty = base;
    faulty.runs = synth.fault_runs;
    faulty.fault_kind = synth.fault_kind;
    faulty.first_run_id = static_cast<std::uint32_t>(synth.normal_runs);
    auto more = dataio::synth_generate(faulty);
    runs.insert(runs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  if (runs.empty()) throw ConfigError("synthetic dataset would contain no runs");
  return runs;
}

}  // namespace tsad::cli
