#include "tsad/benchproto/persist.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "tsad/errors.hpp"

namespace tsad::benchproto {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "tsad-benchmark-results";
constexpr int kVersion = 1;

const char* const kRankingHeader =
    "Method,Method Type,F1-Score,F1-Score Ranking,AUPRC,AUPRC Ranking,Total Ranking";

Json to_json(const BenchmarkResult& r, const FoldResult& f) {
  Json config = Json::object();
  for (const auto& [key, value] : f.config) config[key] = value;
  return Json{{"method", r.method},
              {"method_type", r.method_type},
              {"fold", f.fold},
              {"config_index", f.config_index},
              {"config", config},
              {"selection_f1", f.selection_f1},
              {"best_f1", f.best_f1},
              {"auprc", f.auprc},
              {"configs_evaluated", r.configs_evaluated},
              {"configs_total", r.configs_total},
              {"warnings", r.warnings}};
}

}  // namespace

void write_results(std::ostream& out, const std::vector<BenchmarkResult>& results) {
  out << Json{{"format", kFormat}, {"version", kVersion}}.dump() << '\n';
  for (const auto& r : results) {
    if (r.folds.empty()) throw ContractError("benchmark result for " + r.method + " has no folds");
    for (const auto& f : r.folds) out << to_json(r, f).dump() << '\n';
  }
}

std::vector<BenchmarkResult> read_results(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing results header", 1);
  ++line_no;
  try {
    const auto header = Json::parse(line);
    if (header.at("format") != kFormat || header.at("version") != kVersion) {
      throw ParseError("unsupported results header", line_no);
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("bad results header: ") + e.what(), line_no);
  }

  std::vector<BenchmarkResult> out;
  std::map<std::string, std::size_t> index;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++record;
    try {
      const auto j = Json::parse(line);
      FoldResult f;
      f.fold = j.at("fold").get<std::size_t>();
      f.config_index = j.at("config_index").get<std::size_t>();
      for (const auto& [key, value] : j.at("config").items()) f.config.emplace_back(key, value.get<double>());
      f.selection_f1 = j.at("selection_f1").get<double>();
      f.best_f1 = j.at("best_f1").get<double>();
      f.auprc = j.at("auprc").get<double>();
      const auto method = j.at("method").get<std::string>();
      auto [it, fresh] = index.try_emplace(method, out.size());
      if (fresh) {
        BenchmarkResult r;
        r.method = method;
        r.method_type = j.at("method_type").get<std::string>();
        r.configs_evaluated = j.at("configs_evaluated").get<std::size_t>();
        r.configs_total = j.at("configs_total").get<std::size_t>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        out.push_back(std::move(r));
      }
      out[it->second].folds.push_back(std::move(f));
    } catch (const Json::exception& e) {
      throw ParseError("record " + std::to_string(record) + ": " + e.what(), line_no);
    }
  }
  for (auto& r : out) update_aggregates(r);
  return out;
}

void save_results(const std::filesystem::path& path, const std::vector<BenchmarkResult>& results) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_results(out, results);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<BenchmarkResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_results(in);
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no);
  return fields;
}

template <class T>
T parse_number(const std::string& s, const char* column, std::size_t line_no) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(std::string("bad ") + column + " value '" + s + "'", line_no);
  }
  return v;
}

}  // namespace

void write_ranking_csv(std::ostream& out, const std::vector<RankingRow>& rows) {
  out << kRankingHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.method) << ',' << csv_field(r.method_type) << ',' << format_double(r.f1) << ','
        << r.f1_rank << ',' << format_double(r.auprc) << ',' << r.auprc_rank << ',' << r.total_rank << '\n';
  }
}

std::vector<RankingRow> read_ranking_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing ranking header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRankingHeader) throw ParseError("unexpected ranking header", 1);
  std::vector<RankingRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line, line_no);
    if (f.size() != 7) throw ParseError("expected 7 fields, got " + std::to_string(f.size()), line_no);
    rows.push_back({f[0], f[1], parse_number<double>(f[2], "F1-Score", line_no),
                    parse_number<std::size_t>(f[3], "F1-Score Ranking", line_no),
                    parse_number<double>(f[4], "AUPRC", line_no),
                    parse_number<std::size_t>(f[5], "AUPRC Ranking", line_no),
                    parse_number<std::size_t>(f[6], "Total Ranking", line_no)});
  }
  return rows;
}

void save_ranking_csv(const std::filesystem::path& path, const std::vector<RankingRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_ranking_csv(out, rows);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<RankingRow> load_ranking_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_ranking_csv(in);
}

}  // namespace tsad::benchproto
