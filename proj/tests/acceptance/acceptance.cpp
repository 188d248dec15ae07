// Acceptance suite. Each criterion prints one PASS/FAIL line; pass criterion
// numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_cases.hpp"
#include "published_ranking.hpp"
#include "tsad/benchproto/protocol.hpp"
#include "tsad/cli/app.hpp"
#include "tsad/cli/config.hpp"
#include "tsad/detectors/detector.hpp"
#include "tsad/evalkit/metrics.hpp"
#include "tsad/numkit/rng.hpp"
#include "tsad/scoring/scoring.hpp"

namespace bp = tsad::benchproto;
namespace det = tsad::detectors;
namespace dio = tsad::dataio;
namespace ev = tsad::evalkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> notes;  // printed under the status line

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double runtime_limit;  // seconds
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// 1. Total ranks recomputed from the published (F1 rank, AUPRC rank) pairs.
Outcome ranking_reproduction() {
  Outcome o;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bp::MethodScore> rows;
  for (const auto& r : tsad::testdata::kPublishedRanking) {
    pairs.emplace_back(r.f1_rank, r.auprc_rank);
    rows.push_back({r.method, r.type, 1.0 - 0.001 * static_cast<double>(r.f1_rank),
                    1.0 - 0.001 * static_cast<double>(r.auprc_rank)});
  }
  const auto totals = bp::total_ranks(pairs);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < totals.size(); ++i) {
    const auto& p = tsad::testdata::kPublishedRanking[i];
    if (totals[i] == p.total_rank) ++matched;
    else o.require(false, std::string(p.method) + " total " + std::to_string(totals[i]) + " != " + std::to_string(p.total_rank));
  }
  const auto ranked = bp::rank_methods(rows);
  std::vector<std::size_t> column;
  for (const auto& r : ranked) column.push_back(r.total_rank);
  const std::vector<std::size_t> published{1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12, 13, 14,
                                           15, 16, 17, 17, 19, 19, 21, 22, 23, 24, 25, 25, 27};
  o.require(column == published, "rank_methods total column differs from the published column");
  o.detail = std::to_string(matched) + "/27 total ranks match, tie groups 17/17, 19/19, 25/25";
  return o;
}

double f1_of(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t d = 2 * tp + fp + fn;
  return d == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(d);
}

// Brute force: every distinct score as an inclusive cut, plus predicting nothing.
double oracle_best_f1(const std::vector<double>& s, const std::vector<std::uint8_t>& l) {
  std::size_t pos = 0;
  for (auto v : l) pos += v;
  double best = f1_of(0, 0, pos);
  for (double cut : s) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= cut) (l[i] ? tp : fp)++;
    }
    best = std::max(best, f1_of(tp, fp, pos - tp));
  }
  return best;
}

double f1_at_strict(const std::vector<double>& s, const std::vector<std::uint8_t>& l, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] > threshold;
    if (pred && l[i]) ++tp;
    else if (pred) ++fp;
    else if (l[i]) ++fn;
  }
  return f1_of(tp, fp, fn);
}

double oracle_auprc(const std::vector<double>& s, const std::vector<std::uint8_t>& l) {
  std::set<double, std::greater<>> cuts(s.begin(), s.end());
  std::size_t pos = 0;
  for (auto v : l) pos += v;
  double ap = 0, prev_recall = 0;
  for (double cut : cuts) {
    std::size_t tp = 0, predicted = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= cut) {
        ++predicted;
        tp += l[i];
      }
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    ap += static_cast<double>(tp) / static_cast<double>(predicted) * (recall - prev_recall);
    prev_recall = recall;
  }
  return ap;
}

// 2. Library metrics against the brute-force oracle.
Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 gen(20240101);
  double worst_f1 = 0, worst_ap = 0, worst_thr = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = std::uniform_int_distribution<std::size_t>(2, 64)(gen);
    const double p = std::uniform_real_distribution<double>(0.05, 0.9)(gen);
    std::vector<std::uint8_t> l(T);
    std::vector<double> s(T);
    do {
      for (auto& v : l) v = std::bernoulli_distribution(p)(gen);
    } while (std::count(l.begin(), l.end(), 1) == 0);
    const bool tied = trial % 2 == 0;
    for (auto& v : s) {
      v = tied ? static_cast<double>(std::uniform_int_distribution<int>(0, 5)(gen))
               : std::normal_distribution<double>(0, 1)(gen);
    }
    const auto best = ev::best_f1(s, l);
    const double ap = ev::auprc(ev::pr_curve(s, l));
    const double of1 = oracle_best_f1(s, l);
    worst_f1 = std::max(worst_f1, std::abs(best.f1 - of1));
    worst_ap = std::max(worst_ap, std::abs(ap - oracle_auprc(s, l)));
    worst_thr = std::max(worst_thr, std::abs(f1_at_strict(s, l, best.threshold) - of1));
  }
  o.require(worst_f1 <= 1e-12, "best F1 deviates by " + std::to_string(worst_f1));
  o.require(worst_ap <= 1e-12, "AUPRC deviates by " + std::to_string(worst_ap));
  o.require(worst_thr <= 1e-12, "reported threshold does not realize the best F1");
  std::ostringstream d;
  d << "200 instances, max |dF1| " << worst_f1 << ", max |dAUPRC| " << worst_ap << ", threshold check " << worst_thr;
  o.detail = d.str();
  return o;
}

// 3. Hand-computed values.
Outcome hand_values() {
  Outcome o;
  const double f = ev::f1(ev::ConfusionCounts{2, 1, 0, 1});
  o.require(std::abs(f - 2.0 / 3.0) <= 1e-9, "f1(tp=2,fn=1,fp=1) = " + std::to_string(f));
  const std::vector<double> s{0.9, 0.1};
  const std::vector<std::uint8_t> l{0, 1};
  const double ap = ev::auprc(ev::pr_curve(s, l));
  o.require(std::abs(ap - 0.5) <= 1e-9, "auprc([0,1],[0.9,0.1]) = " + std::to_string(ap));
  const std::vector<double> errors{1.0, 3.0};
  const auto model = tsad::scoring::fit_gaussian(errors, 1);
  const std::vector<double> e{2.0};
  const double nll = tsad::scoring::nll(model, e);
  o.require(std::abs(model.mean[0] - 2.0) <= 1e-9 && std::abs(model.variance[0] - 1.0) <= 1e-9,
            "fit on {1,3} is not mean 2, variance 1");
  o.require(std::abs(nll - 0.5 * std::log(2 * std::numbers::pi)) <= 1e-9 && std::abs(nll - 0.918939) < 5e-7,
            "nll(2) = " + std::to_string(nll));
  const std::vector<double> v1{0.3, -1.2, 2.0}, vt{-0.7, 0.4, 5.5};
  const double T = 31;
  const auto a = det::dvae_prior_mean(v1, vt, 0, T), b = det::dvae_prior_mean(v1, vt, T, T);
  for (std::size_t i = 0; i < 3; ++i) {
    o.require(std::abs(a[i] - v1[i]) <= 1e-9, "prior mean at t=0 is not v1");
    o.require(std::abs(b[i] - vt[i]) <= 1e-9, "prior mean at t=T is not vT");
  }
  o.detail = "f1 " + fmt(f, 6) + ", auprc " + fmt(ap, 6) + ", nll " + fmt(nll, 6) + ", prior endpoints exact";
  return o;
}

// 4. Central differences for every primitive over 10 seeds.
Outcome gradient_suite() {
  Outcome o;
  double worst = 0;
  std::string where;
  std::size_t checked = 0, cases = 0;
  for (const auto& gc : tsad::testing::gradient_cases()) {
    ++cases;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto store = gc.make_store(seed);
      const auto r = tsad::testing::check_gradients(store, gc.build);
      checked += r.checked;
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        where = gc.name + " seed " + std::to_string(seed) + " " + r.worst_parameter;
      }
      o.require(r.max_relative_error < 1e-4, gc.name + " seed " + std::to_string(seed) + " rel err " +
                                                 std::to_string(r.max_relative_error));
    }
  }
  std::ostringstream d;
  d << cases << " cases x 10 seeds, " << checked << " scalars, max rel err " << worst << " (" << where << ")";
  o.detail = d.str();
  return o;
}

bool is_reconstruction(det::Variant v) { return det::family_of(v) == det::Family::Reconstruction; }

// 5. Every detector on a synthetic step-fault benchmark.
Outcome desk_benchmark() {
  Outcome o;
  const std::uint64_t seed = 7;
  tsad::cli::SynthSettings synth;  // D=8, 8 fault-free + 20 faulty runs, T=400, 5 sigma steps at t=200
  auto [normal, faulty] = dio::partition_fault_free(tsad::cli::generate_dataset(synth, seed));
  const auto data = dio::make_split(std::move(normal), std::move(faulty));
  const auto plan = bp::make_folds(data.test.size(), 5);

  std::vector<dio::Labels> labels;
  std::size_t positives = 0, steps = 0;
  for (const auto& r : data.test) {
    labels.push_back(r.series.labels_or_zero());
    positives += static_cast<std::size_t>(std::count(labels.back().begin(), labels.back().end(), 1));
    steps += labels.back().size();
  }
  const double prevalence = static_cast<double>(positives) / static_cast<double>(steps);

  bp::ScoreCache random_cache(1);
  tsad::numkit::Rng rng(seed, "acceptance/random-scorer");
  for (const auto& r : data.test) {
    std::vector<double> s(r.series.steps());
    for (double& v : s) v = rng.uniform(0, 1);
    random_cache[0].push_back(std::move(s));
  }
  double random_auprc = 0;
  for (const auto& f : bp::select_configs(random_cache, labels, plan)) random_auprc += f.auprc / 5.0;
  o.notes.push_back("prevalence " + fmt(prevalence) + ", uniform-random AUPRC " + fmt(random_auprc));

  for (auto v : det::all_variants()) {
    bp::GridSpec grid;
    grid.base = det::default_spec(v);
    grid.base.window = {32, 4};
    grid.base.epochs = 10;
    grid.base.seed = seed;
    grid.budget_seconds = 60;
    const auto start = std::chrono::steady_clock::now();
    const auto result = bp::grid_search(grid, data, plan);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.notes.push_back(det::display_name(v) + ": F1 " + fmt(result.best_f1) + ", AUPRC " + fmt(result.auprc) + " (" +
                      fmt(secs, 1) + " s)");
    if (v == det::Variant::UntrainedLstmAE) {
      o.require(result.auprc > prevalence, "Untrained-LSTM-AE AUPRC not above prevalence");
      continue;
    }
    o.require(result.auprc >= prevalence + 0.2, det::display_name(v) + " AUPRC below prevalence + 0.2");
    if (is_reconstruction(v)) {
      o.require(result.auprc >= random_auprc + 0.3, det::display_name(v) + " not 0.3 above the random scorer");
    }
  }
  o.detail = "13 detectors, 20 step-fault runs, thresholds prevalence+0.2 / random+0.3";
  return o;
}

// 6. Fold partition, neighbor exclusion and end-to-end determinism.
Outcome protocol_invariants() {
  Outcome o;
  const auto plan = bp::make_folds(20, 5);
  std::vector<std::size_t> all;
  for (const auto& f : plan.folds) {
    o.require(f.size() == 4, "fold size differs from 4");
    all.insert(all.end(), f.begin(), f.end());
  }
  std::vector<std::size_t> expected(20);
  for (std::size_t i = 0; i < 20; ++i) expected[i] = i;
  o.require(all == expected, "folds do not partition the runs");
  o.require(bp::eval_folds_for(0, 5, 1) == std::vector<std::size_t>{2, 3, 4}, "eval folds for 0");
  o.require(bp::eval_folds_for(2, 5, 1) == std::vector<std::size_t>{0, 4}, "eval folds for 2");

  const auto dir = fs::temp_directory_path() / "tsad_acceptance_protocol";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "bench.ini") << "[run]\nseed = 11\ndetectors = dense_ae, lstm_p, usad\n"
                                      "[synth]\nnormal_runs = 4\nfault_runs = 10\nsteps = 160\nfeatures = 4\n"
                                      "fault_onset = 80\n"
                                      "[detector]\nwindow = 16\nstride = 4\nepochs = 3\nhidden_size = 8\n"
                                      "latent_dim = 4\n"
                                      "[grid]\nlearning_rate = 0.001, 0.01\n";
  std::ostringstream sink;
  std::string files[2];
  for (int k = 0; k < 2; ++k) {
    const auto out = dir / ("run" + std::to_string(k));
    const int rc = tsad::cli::run({"benchmark", "--config", (dir / "bench.ini").string(), "--out", out.string()},
                                  sink, sink);
    o.require(rc == 0, "benchmark exit code " + std::to_string(rc));
    std::ifstream in(out / "ranking.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[k] = ss.str();
  }
  o.require(!files[0].empty() && files[0] == files[1], "ranking files differ between identical runs");
  fs::remove_all(dir);
  o.detail = "20 runs -> 5x4 folds, exclusion {0:{2,3,4}, 2:{0,4}}, ranking files byte-identical (" +
             std::to_string(files[0].size()) + " bytes)";
  return o;
}

// 7. Mean score grows with injected noise on held-out normal data.
Outcome corruption_monotonicity() {
  Outcome o;
  std::size_t checked = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    tsad::cli::SynthSettings synth;
    synth.normal_runs = 5;
    synth.fault_runs = 0;
    auto runs = tsad::cli::generate_dataset(synth, seed);
    const auto held_out = runs.back().series;
    runs.pop_back();
    const auto split = dio::make_split(std::move(runs), {});
    for (auto v : det::all_variants()) {
      if (!is_reconstruction(v)) continue;
      auto spec = det::default_spec(v);
      spec.window = {32, 4};
      spec.epochs = 10;
      spec.seed = seed;
      const auto model = det::fit(spec, split);
      std::vector<double> means;
      for (double level : {0.0, 1.0, 2.0}) {
        auto noisy = held_out;
        tsad::numkit::Rng rng(seed, "acceptance/noise");
        for (std::size_t t = 0; t < noisy.steps(); ++t) {
          for (std::size_t j = 0; j < noisy.features(); ++j) noisy.at(t, j) += level * model.norm.std[j] * rng.normal();
        }
        const auto s = det::score(model, noisy).scores;
        double m = 0;
        for (double x : s) m += x;
        means.push_back(m / static_cast<double>(s.size()));
      }
      ++checked;
      const bool ok = means[0] < means[1] && means[1] < means[2];
      std::ostringstream note;
      note << det::display_name(v) << " seed " << seed << ": " << means[0] << " < " << means[1] << " < " << means[2];
      o.notes.push_back(note.str());
      o.require(ok, det::display_name(v) + " seed " + std::to_string(seed) + " not strictly increasing");
    }
  }
  o.detail = std::to_string(checked) + " (variant, seed) pairs at noise 0, 1, 2 sigma";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "ranking reproduction", 1, ranking_reproduction},
      {2, "metric oracle equivalence", 10, metric_oracle},
      {3, "hand-value checks", 1, hand_values},
      {4, "gradient suite", 30, gradient_suite},
      {5, "desk-scale benchmark", 1800, desk_benchmark},
      {6, "protocol invariants", 60, protocol_invariants},
      {7, "corruption monotonicity", 300, corruption_monotonicity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.runtime_limit) {
      o.pass = false;
      o.notes.push_back("failed: runtime " + fmt(secs, 1) + " s over the " + fmt(c.runtime_limit, 0) + " s limit");
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.id << " " << c.name << ": " << o.detail
              << " [" << fmt(secs, 2) << " s / " << fmt(c.runtime_limit, 0) << " s]\n";
    for (const auto& n : o.notes) std::cout << "       " << n << '\n';
    std::cout.flush();
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
