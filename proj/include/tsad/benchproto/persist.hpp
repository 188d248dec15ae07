#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tsad/benchproto/protocol.hpp"

namespace tsad::benchproto {

// Results: JSON lines. Line 1 is a header object; each further line is one
// (method, fold) record. Aggregates are recomputed on load.
void write_results(std::ostream& out, const std::vector<BenchmarkResult>& results);
std::vector<BenchmarkResult> read_results(std::istream& in);
void save_results(const std::filesystem::path& path, const std::vector<BenchmarkResult>& results);
std::vector<BenchmarkResult> load_results(const std::filesystem::path& path);

// Ranking table as CSV:
// Method,Method Type,F1-Score,F1-Score Ranking,AUPRC,AUPRC Ranking,Total Ranking
void write_ranking_csv(std::ostream& out, const std::vector<RankingRow>& rows);
std::vector<RankingRow> read_ranking_csv(std::istream& in);
void save_ranking_csv(const std::filesystem::path& path, const std::vector<RankingRow>& rows);
std::vector<RankingRow> load_ranking_csv(const std::filesystem::path& path);

}  // namespace tsad::benchproto
