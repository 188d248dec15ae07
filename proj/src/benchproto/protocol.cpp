#include "tsad/benchproto/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>

#include "tsad/errors.hpp"
#include "tsad/evalkit/metrics.hpp"

namespace tsad::benchproto {

namespace det = detectors;

FoldPlan make_folds(std::size_t n_runs, std::size_t k, std::size_t radius) {
  if (k == 0) throw ContractError("fold count must be positive");
  if (n_runs < k) {
    throw ContractError(std::to_string(n_runs) + " test runs cannot fill " + std::to_string(k) + " folds");
  }
  FoldPlan plan;
  plan.radius = radius;
  plan.folds.resize(k);
  const std::size_t base = n_runs / k, extra = n_runs % k;
  std::size_t next = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) plan.folds[f].push_back(next++);
  }
  return plan;
}

std::vector<std::size_t> eval_folds_for(std::size_t i, std::size_t k, std::size_t r) {
  if (i >= k) throw ContractError("selection fold " + std::to_string(i) + " out of range");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t dist = j > i ? j - i : i - j;
    if (dist > r) out.push_back(j);
  }
  return out;
}

namespace {

std::size_t as_count(const std::string& key, double value, std::size_t min) {
  if (!std::isfinite(value) || value != std::floor(value) || value < static_cast<double>(min)) {
    throw ConfigError("hyperparameter " + key + " needs an integer >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(value);
}

const std::vector<std::string>& hyperparameter_keys() {
  static const std::vector<std::string> keys{"window",     "stride",     "hidden_size", "latent_dim", "layers",
                                             "epochs",     "learning_rate", "horizon", "mc_samples", "alpha",
                                             "beta",       "lambda",     "batch_size",  "noise_std",  "mask_rate",
                                             "grad_clip",  "pooling"};
  return keys;
}

}  // namespace

bool is_hyperparameter(const std::string& key) {
  const auto& keys = hyperparameter_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void set_hyperparameter(det::DetectorSpec& spec, const std::string& key, double value) {
  if (key == "window") spec.window.width = as_count(key, value, 1);
  else if (key == "stride") spec.window.stride = as_count(key, value, 1);
  else if (key == "hidden_size") spec.hidden_size = as_count(key, value, 1);
  else if (key == "latent_dim") spec.latent_dim = as_count(key, value, 1);
  else if (key == "layers") spec.layers = as_count(key, value, 1);
  else if (key == "epochs") spec.epochs = as_count(key, value, 0);
  else if (key == "horizon") spec.horizon = as_count(key, value, 1);
  else if (key == "mc_samples") spec.mc_samples = as_count(key, value, 1);
  else if (key == "batch_size") spec.batch_size = as_count(key, value, 1);
  else if (key == "learning_rate") spec.learning_rate = value;
  else if (key == "alpha") spec.alpha = value;
  else if (key == "beta") spec.beta = value;
  else if (key == "lambda") spec.lambda = value;
  else if (key == "noise_std") spec.noise_std = value;
  else if (key == "mask_rate") spec.mask_rate = value;
  else if (key == "grad_clip") spec.grad_clip = value;
  else if (key == "pooling") spec.pooling = as_count(key, value, 0) == 0 ? det::Pooling::Max : det::Pooling::Mean;
  else throw ConfigError("unknown hyperparameter '" + key + "'");
}

void validate_grid(const GridSpec& grid) {
  if (!(grid.budget_seconds > 0)) throw ConfigError("budget_seconds must be positive");
  for (std::size_t i = 0; i < grid.candidates.size(); ++i) {
    const auto& [key, values] = grid.candidates[i];
    if (values.empty()) throw ConfigError("hyperparameter " + key + " has no candidates");
    for (std::size_t j = 0; j < i; ++j) {
      if (grid.candidates[j].first == key) throw ConfigError("hyperparameter " + key + " listed twice");
    }
    auto spec = grid.base;
    for (double v : values) set_hyperparameter(spec, key, v);
  }
  det::validate_spec(grid.base);
}

std::vector<Config> expand_grid(const GridSpec& grid) {
  std::vector<Config> out{Config{}};
  for (const auto& [key, values] : grid.candidates) {
    std::vector<Config> next;
    next.reserve(out.size() * values.size());
    for (const auto& prefix : out) {
      for (double v : values) {
        auto c = prefix;
        c.emplace_back(key, v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

void update_aggregates(BenchmarkResult& result) {
  if (result.folds.empty()) throw ContractError("benchmark result for " + result.method + " has no folds");
  double f1 = 0, ap = 0;
  for (const auto& f : result.folds) {
    f1 += f.best_f1;
    ap += f.auprc;
  }
  const double n = static_cast<double>(result.folds.size());
  result.best_f1 = f1 / n;
  result.auprc = ap / n;
}

namespace {

evalkit::MetricReport pooled(const std::vector<std::vector<double>>& scores,
                             const std::vector<std::vector<std::uint8_t>>& labels,
                             const std::vector<std::size_t>& runs) {
  std::vector<std::vector<double>> s;
  std::vector<std::vector<std::uint8_t>> l;
  for (std::size_t r : runs) {
    s.push_back(scores[r]);
    l.push_back(labels[r]);
  }
  return evalkit::evaluate_runs(s, l);
}

std::vector<std::size_t> runs_of(const FoldPlan& plan, const std::vector<std::size_t>& folds) {
  std::vector<std::size_t> out;
  for (std::size_t f : folds) out.insert(out.end(), plan.folds[f].begin(), plan.folds[f].end());
  return out;
}

}  // namespace

std::vector<FoldResult> select_configs(const ScoreCache& scores, const std::vector<dataio::Labels>& labels,
                                       const FoldPlan& plan) {
  const std::size_t k = plan.size();
  std::vector<FoldResult> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::optional<std::size_t> best;
    double best_f1 = -1.0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      if (scores[c].empty()) continue;
      if (scores[c].size() != labels.size()) throw ContractError("score cache does not match the test runs");
      const double f = pooled(scores[c], labels, plan.folds[i]).best_f1;
      if (f > best_f1) {
        best_f1 = f;
        best = c;
      }
    }
    if (!best) throw ContractError("no successful config to select from");
    const auto report = pooled(scores[*best], labels, runs_of(plan, eval_folds_for(i, k, plan.radius)));
    out.push_back({i, *best, {}, best_f1, report.best_f1, report.auprc});
  }
  return out;
}

BenchmarkResult grid_search(const GridSpec& grid, const dataio::DatasetSplit& data, const FoldPlan& plan,
                            const Logger& log) {
  validate_grid(grid);
  const std::size_t k = plan.size();
  if (k == 0) throw ContractError("fold plan is empty");
  std::size_t planned = 0;
  for (const auto& f : plan.folds) {
    for (std::size_t r : f) {
      if (r >= data.test.size()) throw ContractError("fold refers to missing test run " + std::to_string(r));
    }
    planned += f.size();
  }
  if (planned != data.test.size()) throw ContractError("fold plan does not cover every test run");
  for (std::size_t i = 0; i < k; ++i) {
    if (eval_folds_for(i, k, plan.radius).empty()) {
      throw ContractError("fold " + std::to_string(i) + " has no evaluation folds at radius " +
                          std::to_string(plan.radius));
    }
  }

  BenchmarkResult result;
  result.method = det::display_name(grid.base.variant);
  result.method_type = det::family_name(det::family_of(grid.base.variant));
  const auto configs = expand_grid(grid);
  result.configs_total = configs.size();
  auto note = [&](std::string msg) {
    if (log) log(result.method + ": " + msg);
    result.warnings.push_back(std::move(msg));
  };

  std::vector<dataio::Labels> labels;
  for (const auto& run : data.test) labels.push_back(run.series.labels_or_zero());

  ScoreCache scores;
  std::exception_ptr first_failure;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c > 0 && elapsed >= grid.budget_seconds) {
      note("budget of " + std::to_string(grid.budget_seconds) + " s exhausted after " + std::to_string(c) + " of " +
           std::to_string(configs.size()) + " configs");
      break;
    }
    auto spec = grid.base;
    for (const auto& [key, value] : configs[c]) set_hyperparameter(spec, key, value);
    std::vector<std::vector<double>> per_run;
    try {
      const auto model = det::fit(spec, data);
      for (const auto& run : data.test) per_run.push_back(det::score(model, run.series).scores);
    } catch (const TrainingError& e) {
      if (!first_failure) first_failure = std::current_exception();
      note("config " + std::to_string(c) + " failed: " + e.what());
      per_run.clear();
    } catch (const NumericError& e) {
      if (!first_failure) first_failure = std::current_exception();
      note("config " + std::to_string(c) + " failed: " + e.what());
      per_run.clear();
    }
    scores.push_back(std::move(per_run));
  }
  result.configs_evaluated = scores.size();
  if (std::all_of(scores.begin(), scores.end(), [](const auto& s) { return s.empty(); })) {
    std::rethrow_exception(first_failure);
  }

  result.folds = select_configs(scores, labels, plan);
  for (auto& f : result.folds) f.config = configs[f.config_index];
  update_aggregates(result);
  return result;
}

std::vector<std::size_t> competition_ranks(const std::vector<double>& values, bool descending) {
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t better = 0;
    for (double v : values) better += descending ? (v > values[i]) : (v < values[i]);
    ranks[i] = better + 1;
  }
  return ranks;
}

std::vector<std::size_t> total_ranks(const std::vector<std::pair<std::size_t, std::size_t>>& rank_pairs) {
  // sums order the same way as means and stay exact
  std::vector<double> sums;
  for (const auto& [a, b] : rank_pairs) sums.push_back(static_cast<double>(a + b));
  return competition_ranks(sums, false);
}

std::vector<RankingRow> rank_methods(const std::vector<MethodScore>& rows) {
  if (rows.empty()) throw ContractError("rank_methods needs at least one row");
  std::vector<double> f1s, aps;
  for (const auto& r : rows) {
    if (!std::isfinite(r.f1) || !std::isfinite(r.auprc)) throw NumericError("non-finite metric for " + r.method);
    f1s.push_back(r.f1);
    aps.push_back(r.auprc);
  }
  const auto f1_rank = competition_ranks(f1s, true);
  const auto ap_rank = competition_ranks(aps, true);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < rows.size(); ++i) pairs.emplace_back(f1_rank[i], ap_rank[i]);
  const auto total = total_ranks(pairs);
  std::vector<RankingRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({rows[i].method, rows[i].method_type, rows[i].f1, f1_rank[i], rows[i].auprc, ap_rank[i], total[i]});
  }
  std::sort(out.begin(), out.end(), [](const RankingRow& a, const RankingRow& b) {
    return a.total_rank != b.total_rank ? a.total_rank < b.total_rank : a.method < b.method;
  });
  return out;
}

std::vector<RankingRow> rank_results(const std::vector<BenchmarkResult>& results) {
  std::vector<MethodScore> rows;
  for (const auto& r : results) rows.push_back({r.method, r.method_type, r.best_f1, r.auprc});
  return rank_methods(rows);
}

}  // namespace tsad::benchproto
