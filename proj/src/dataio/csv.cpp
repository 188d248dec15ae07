#include "tsad/dataio/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string_view>
#include <tuple>

#include "tsad/errors.hpp"

namespace tsad::dataio {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line, const std::string& column) {
  double v = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("line " + std::to_string(line) + ": column '" + column + "' is not a number: '" + std::string(text) + "'");
  }
  return v;
}

long long parse_integer(std::string_view text, std::size_t line, const std::string& column) {
  const double v = parse_double(text, line, column);
  const auto i = static_cast<long long>(v);
  if (static_cast<double>(i) != v) {
    throw DataError("line " + std::to_string(line) + ": column '" + column + "' must be an integer");
  }
  return i;
}

struct PendingRun {
  std::vector<long long> timesteps;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::optional<long long> onset;
};

std::optional<std::size_t> find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
  const auto idx = find_column(header, name);
  if (!idx) throw SchemaError("missing column '" + name + "'");
  return *idx;
}

}  // namespace

std::vector<RunRecord> read_runs_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);

  const std::size_t fault_col = require_column(header, schema.fault_column);
  const std::size_t run_col = require_column(header, schema.run_column);
  const std::size_t time_col = require_column(header, schema.time_column);
  const auto label_col = find_column(header, schema.label_column);
  const auto onset_col = find_column(header, schema.onset_column);

  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == fault_col || i == run_col || i == time_col || i == label_col || i == onset_col) continue;
    feature_cols.push_back(i);
  }
  if (feature_cols.empty()) throw SchemaError("no feature columns besides the schema columns");

  std::map<std::pair<int, std::uint32_t>, PendingRun> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    const auto fault = parse_integer(fields[fault_col], line_no, schema.fault_column);
    if (fault < 0 || fault > 20) {
      throw DataError("line " + std::to_string(line_no) + ": fault_id " + std::to_string(fault) + " outside [0, 20]");
    }
    const auto run = parse_integer(fields[run_col], line_no, schema.run_column);
    if (run < 0 || run > static_cast<long long>(UINT32_MAX)) {
      throw DataError("line " + std::to_string(line_no) + ": run_id out of range");
    }
    auto& g = groups[{static_cast<int>(fault), static_cast<std::uint32_t>(run)}];
    const auto ts = parse_integer(fields[time_col], line_no, schema.time_column);
    if (!g.timesteps.empty() && ts <= g.timesteps.back()) {
      throw DataError("line " + std::to_string(line_no) + ": timestep " + std::to_string(ts) +
                      " does not increase within run " + std::to_string(run));
    }
    g.timesteps.push_back(ts);
    for (std::size_t c : feature_cols) g.values.push_back(parse_double(fields[c], line_no, header[c]));
    if (label_col) {
      const auto l = parse_integer(fields[*label_col], line_no, schema.label_column);
      if (l != 0 && l != 1) throw DataError("line " + std::to_string(line_no) + ": label must be 0 or 1");
      g.labels.push_back(static_cast<std::uint8_t>(l));
    }
    if (onset_col && !fields[*onset_col].empty()) {
      const auto o = parse_integer(fields[*onset_col], line_no, schema.onset_column);
      if (g.onset && *g.onset != o) throw DataError("line " + std::to_string(line_no) + ": fault onset changes within a run");
      g.onset = o;
    }
  }
  if (groups.empty()) throw DataError("file has a header but no data rows");

  const std::size_t d = feature_cols.size();
  const std::size_t steps = groups.begin()->second.timesteps.size();
  std::vector<RunRecord> runs;
  for (auto& [key, g] : groups) {
    const std::size_t t = g.timesteps.size();
    if (t != steps) {
      throw DataError("run " + std::to_string(key.second) + " has " + std::to_string(t) + " rows but run " +
                      std::to_string(groups.begin()->first.second) + " has " + std::to_string(steps));
    }
    Labels labels(t, 0);
    if (label_col) {
      labels = std::move(g.labels);
    } else if (key.first != 0) {
      std::size_t onset = 0;
      if (g.onset) {
        if (*g.onset < 0) throw DataError("negative fault onset in run " + std::to_string(key.second));
        onset = std::min<std::size_t>(static_cast<std::size_t>(*g.onset), t);
      } else if (schema.default_fault_onset) {
        onset = std::min(*schema.default_fault_onset, t);
      }
      std::fill(labels.begin() + static_cast<std::ptrdiff_t>(onset), labels.end(), 1);
    }
    RunRecord record{key.second, key.first, SeriesMatrix(t, d, std::move(g.values), schema.dt_minutes, std::move(labels))};
    validate_run(record);
    runs.push_back(std::move(record));
  }
  return runs;
}

std::vector<RunRecord> load_runs_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_runs_csv(in, schema);
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw ContractError("no runs to write");
  const std::size_t d = runs.front().series.features();
  out << "fault_id,run_id,timestep,label";
  for (std::size_t j = 0; j < d; ++j) out << ",x" << (j + 1);
  out << '\n';
  char buf[64];
  for (const auto& run : runs) {
    if (run.series.features() != d) throw DimensionError("runs disagree on feature count");
    const Labels labels = run.series.labels_or_zero();
    for (std::size_t t = 0; t < run.series.steps(); ++t) {
      out << run.fault_id << ',' << run.run_id << ',' << t << ',' << static_cast<int>(labels[t]);
      for (std::size_t j = 0; j < d; ++j) {
        const auto res = std::to_chars(buf, buf + sizeof buf, run.series.at(t, j));
        out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
      }
      out << '\n';
    }
  }
}

void save_runs_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_runs_csv(out, runs);
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace tsad::dataio
