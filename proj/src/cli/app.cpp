#include "tsad/cli/app.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsad/benchproto/persist.hpp"
#include "tsad/cli/config.hpp"
#include "tsad/errors.hpp"
#include "tsad/evalkit/metrics.hpp"

namespace tsad::cli {

namespace fs = std::filesystem;
namespace det = detectors;
namespace bp = benchproto;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget_seconds;
  std::string out;
  std::string detectors;
  std::string data;
  std::string model;
  std::string scores;
  std::string labels;
  std::string run;
  bool pr_curve = false;
};

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.seed = f.seed;
  if (f.budget_seconds) c.budget_seconds = *f.budget_seconds;
  if (!f.out.empty()) c.out = f.out;
  if (!f.detectors.empty()) c.detectors = parse_detector_list(f.detectors);
  if (!f.data.empty()) c.data_path = f.data;
  return c;
}

fs::path output_dir(const RunConfig& c) {
  fs::create_directories(c.out);
  return c.out;
}

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<dataio::RunRecord> load_data(const RunConfig& c) {
  if (c.data_path) return dataio::load_runs_csv(*c.data_path, c.schema);
  return generate_dataset(c.synth, c.required_seed());
}

const dataio::RunRecord& select_run(const std::vector<dataio::RunRecord>& runs, const std::string& spec,
                                    std::ostream& err) {
  if (runs.empty()) throw DataError("no runs in input");
  if (spec.empty()) {
    if (runs.size() > 1) {
      err << "using run " << runs[0].fault_id << ':' << runs[0].run_id << " (first of " << runs.size() << ")\n";
    }
    return runs[0];
  }
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("--run expects FAULT:RUN, got '" + spec + "'");
  int fault = 0;
  std::uint32_t run = 0;
  const auto a = std::from_chars(spec.data(), spec.data() + colon, fault);
  const auto b = std::from_chars(spec.data() + colon + 1, spec.data() + spec.size(), run);
  if (a.ec != std::errc{} || b.ec != std::errc{} || b.ptr != spec.data() + spec.size()) {
    throw ConfigError("--run expects FAULT:RUN, got '" + spec + "'");
  }
  for (const auto& r : runs) {
    if (r.fault_id == fault && r.run_id == run) return r;
  }
  throw DataError("run " + spec + " not found");
}

int cmd_generate(const Flags& f, std::ostream& out, std::ostream&) {
  const auto c = resolve(f);
  const auto runs = generate_dataset(c.synth, c.required_seed());
  const auto path = output_dir(c) / "dataset.csv";
  dataio::save_runs_csv(path, runs);
  out << "wrote " << path.string() << ": " << c.synth.normal_runs << " fault-free and " << c.synth.fault_runs << ' '
      << dataio::fault_kind_name(c.synth.fault_kind) << " fault runs, " << c.synth.steps << " steps x "
      << c.synth.features << " features\n";
  return kSuccess;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = resolve(f);
  auto [normal, faulty] = dataio::partition_fault_free(load_data(c));
  const auto split = dataio::make_split(std::move(normal), {});
  const auto dir = output_dir(c);
  for (auto v : c.detectors_or_all()) {
    err << "training " << det::display_name(v) << '\n';
    const auto model = det::fit(c.spec_for(v), split);
    const auto path = dir / (det::variant_id(v) + ".model");
    det::save_detector(path, model);
    out << det::variant_id(v) << ": " << model.optimizer_steps << " optimizer steps";
    if (!model.loss_history.empty()) out << ", final loss " << shortest(model.loss_history.back());
    out << " -> " << path.string() << '\n';
  }
  return kSuccess;
}

int cmd_score(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = resolve(f);
  if (!c.data_path) throw ConfigError("score needs --data");
  const auto model = det::load_detector(fs::path(f.model));
  const auto runs = dataio::load_runs_csv(*c.data_path, c.schema);
  const auto& run = select_run(runs, f.run, err);
  const auto s = det::score(model, run.series);
  const auto path = output_dir(c) / "scores.csv";
  std::ofstream file(path);
  if (!file) throw DataError("cannot write " + path.string());
  file << "timestep,score\n";
  for (std::size_t t = 0; t < s.scores.size(); ++t) file << t << ',' << shortest(s.scores[t]) << '\n';
  if (!file) throw DataError("write failed for " + path.string());
  out << "wrote " << s.scores.size() << " scores (warm-up " << s.warmup << ") -> " << path.string() << '\n';
  return kSuccess;
}

std::vector<double> read_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestep,score") throw SchemaError(path.string() + ": expected header 'timestep,score'");
  std::vector<double> scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double v = 0;
    const auto res =
        comma == std::string::npos ? std::from_chars_result{nullptr, std::errc::invalid_argument}
                                   : std::from_chars(line.data() + comma + 1, line.data() + line.size(), v);
    if (res.ec != std::errc{} || res.ptr != line.data() + line.size()) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": bad score row");
    }
    scores.push_back(v);
  }
  return scores;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = resolve(f);
  const auto scores = read_scores(f.scores);
  const auto runs = dataio::load_runs_csv(f.labels, c.schema);
  const auto labels = select_run(runs, f.run, err).series.labels_or_zero();
  if (scores.size() != labels.size()) {
    throw DataError("score count " + std::to_string(scores.size()) + " != label count " +
                    std::to_string(labels.size()));
  }
  const auto report = evalkit::evaluate(scores, labels);
  nlohmann::ordered_json j;
  j["best_f1"] = report.best_f1;
  j["best_threshold"] = report.best_threshold;
  j["auprc"] = report.auprc;
  j["steps"] = scores.size();
  j["positives"] = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  const auto text = j.dump(2) + "\n";
  out << text;
  const auto dir = output_dir(c);
  std::ofstream(dir / "report.json") << text;
  if (f.pr_curve) {
    std::ofstream curve(dir / "pr_curve.csv");
    curve << "recall,precision,threshold\n";
    for (const auto& p : evalkit::pr_curve(scores, labels).points) {
      curve << shortest(p.recall) << ',' << shortest(p.precision) << ',' << shortest(p.threshold) << '\n';
    }
  }
  return kSuccess;
}

void print_ranking(std::ostream& out, const std::vector<bp::RankingRow>& rows) {
  out << std::left << std::setw(20) << "method" << std::setw(16) << "type" << std::right << std::setw(8) << "F1"
      << std::setw(5) << "#" << std::setw(8) << "AUPRC" << std::setw(5) << "#" << std::setw(7) << "total" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(20) << r.method << std::setw(16) << r.method_type << std::right << std::fixed
        << std::setprecision(4) << std::setw(8) << r.f1 << std::setw(5) << r.f1_rank << std::setw(8) << r.auprc
        << std::setw(5) << r.auprc_rank << std::setw(7) << r.total_rank << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

int cmd_benchmark(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto c = resolve(f);
  c.required_seed();
  auto [normal, faulty] = dataio::partition_fault_free(load_data(c));
  const auto data = dataio::make_split(std::move(normal), std::move(faulty));
  const auto plan = bp::make_folds(data.test.size(), c.folds, c.radius);
  const auto dir = output_dir(c);

  std::vector<bp::BenchmarkResult> results;
  std::size_t failures = 0;
  for (auto v : c.detectors_or_all()) {
    err << "benchmarking " << det::display_name(v) << '\n';
    try {
      results.push_back(bp::grid_search(c.grid_for(v), data, plan, [&](const std::string& m) {
        err << "warning: " << m << '\n';
      }));
    } catch (const std::exception& e) {
      ++failures;
      err << "error: " << det::display_name(v) << " failed: " << e.what() << '\n';
    }
  }
  bp::save_results(dir / "results.jsonl", results);
  const auto ranking = results.empty() ? std::vector<bp::RankingRow>{} : bp::rank_results(results);
  bp::save_ranking_csv(dir / "ranking.csv", ranking);
  print_ranking(out, ranking);
  if (failures > 0) {
    err << failures << " method(s) failed\n";
    return kPartialFailure;
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark harness for unsupervised time-series anomaly detectors", "tsad"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "seed for every random stream");
  app.add_option("--budget-seconds", f.budget_seconds, "per-method wall-clock budget")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "output directory");
  app.add_option("--detectors", f.detectors, "comma-separated detector ids, or 'all'");

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset CSV to OUT/dataset.csv");
  auto* train = app.add_subcommand("train", "fit detectors on the fault-free runs, write OUT/<id>.model");
  train->add_option("--data", f.data, "dataset CSV (default: synthetic from config)");
  auto* score = app.add_subcommand("score", "score one run, write OUT/scores.csv");
  score->add_option("--model", f.model, "model file")->required()->check(CLI::ExistingFile);
  score->add_option("--data", f.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  score->add_option("--run", f.run, "FAULT:RUN to score (default: first run)");
  auto* evaluate = app.add_subcommand("evaluate", "metrics for a score file, printed and written to OUT/report.json");
  evaluate->add_option("--scores", f.scores, "timestep,score CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--labels", f.labels, "dataset CSV providing labels")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--run", f.run, "FAULT:RUN holding the labels (default: first run)");
  evaluate->add_flag("--pr-curve", f.pr_curve, "also write OUT/pr_curve.csv");
  auto* benchmark = app.add_subcommand("benchmark", "grid search and ranking, write OUT/results.jsonl and ranking.csv");
  benchmark->add_option("--data", f.data, "dataset CSV (default: synthetic from config)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*generate) return cmd_generate(f, out, err);
    if (*train) return cmd_train(f, out, err);
    if (*score) return cmd_score(f, out, err);
    if (*evaluate) return cmd_evaluate(f, out, err);
    if (*benchmark) return cmd_benchmark(f, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace tsad::cli
