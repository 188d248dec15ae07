#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tsad/dataio/series.hpp"
#include "tsad/detectors/detector.hpp"

namespace tsad::benchproto {

/// Test runs split into K contiguous folds of run indices.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;
  std::size_t radius = 1;

  std::size_t size() const noexcept { return folds.size(); }
};

/// Contiguous blocks in run order; the first n % k folds get one extra run.
FoldPlan make_folds(std::size_t n_runs, std::size_t k = 5, std::size_t radius = 1);

/// Folds usable for evaluation once fold i was used for selection: { j : |j - i| > r }.
std::vector<std::size_t> eval_folds_for(std::size_t i, std::size_t k, std::size_t r);

/// One point of the grid, as (hyperparameter, value) pairs in grid order.
using Config = std::vector<std::pair<std::string, double>>;

struct GridSpec {
  detectors::DetectorSpec base;
  std::vector<std::pair<std::string, std::vector<double>>> candidates;
  double budget_seconds = 60.0;
};

/// Recognized keys: window, stride, hidden_size, latent_dim, layers, epochs,
/// learning_rate, horizon, mc_samples, alpha, beta, lambda, batch_size,
/// noise_std, mask_rate, grad_clip, pooling (0 max, 1 mean).
void set_hyperparameter(detectors::DetectorSpec& spec, const std::string& key, double value);
bool is_hyperparameter(const std::string& key);

/// Cartesian product; the last hyperparameter varies fastest. An empty
/// candidate map yields a single empty config.
std::vector<Config> expand_grid(const GridSpec& grid);

void validate_grid(const GridSpec& grid);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t config_index = 0;
  Config config;
  double selection_f1 = 0.0;
  double best_f1 = 0.0;
  double auprc = 0.0;

  bool operator==(const FoldResult&) const = default;
};

struct BenchmarkResult {
  std::string method;
  std::string method_type;
  std::vector<FoldResult> folds;
  double best_f1 = 0.0;  // mean over folds
  double auprc = 0.0;    // mean over folds
  std::size_t configs_evaluated = 0;
  std::size_t configs_total = 0;
  std::vector<std::string> warnings;

  bool operator==(const BenchmarkResult&) const = default;
};

/// Recomputes best_f1 and auprc as fold means.
void update_aggregates(BenchmarkResult& result);

/// Cached scores per config and test run: scores[c][run]. An empty
/// scores[c] marks a config that failed and is skipped.
using ScoreCache = std::vector<std::vector<std::vector<double>>>;

/// Selection and evaluation over cached scores. The returned FoldResults
/// leave `config` empty.
std::vector<FoldResult> select_configs(const ScoreCache& scores, const std::vector<dataio::Labels>& labels,
                                       const FoldPlan& plan);

using Logger = std::function<void(const std::string&)>;

/// Fits every config (in grid order, until the budget runs out) on
/// data.train/validation and scores all of data.test. Per fold, the config
/// with the highest pooled best F1 on that fold wins (earliest config on
/// ties) and is evaluated on the pooled runs of eval_folds_for.
BenchmarkResult grid_search(const GridSpec& grid, const dataio::DatasetSplit& data, const FoldPlan& plan,
                            const Logger& log = {});

struct MethodScore {
  std::string method;
  std::string method_type;
  double f1 = 0.0;
  double auprc = 0.0;
};

struct RankingRow {
  std::string method;
  std::string method_type;
  double f1 = 0.0;
  std::size_t f1_rank = 0;
  double auprc = 0.0;
  std::size_t auprc_rank = 0;
  std::size_t total_rank = 0;

  bool operator==(const RankingRow&) const = default;
};

/// Competition ("1224") ranks; rank 1 goes to the largest value when descending.
std::vector<std::size_t> competition_ranks(const std::vector<double>& values, bool descending);

/// Total rank from (f1_rank, auprc_rank) pairs: competition rank of the ascending mean.
std::vector<std::size_t> total_ranks(const std::vector<std::pair<std::size_t, std::size_t>>& rank_pairs);

/// Output sorted by total_rank, then method name.
std::vector<RankingRow> rank_methods(const std::vector<MethodScore>& rows);
std::vector<RankingRow> rank_results(const std::vector<BenchmarkResult>& results);

}  // namespace tsad::benchproto
