#include "tsad/dataio/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>

#include "tsad/errors.hpp"
#include "tsad/numkit/rng.hpp"

namespace tsad::dataio {

namespace {

constexpr double kSpectralRadius = 0.9;
constexpr double kMeasurementStd = 0.5;

struct SensorLayout {
  std::vector<double> level;
  std::vector<double> gain;
};

SensorLayout sensor_layout(std::size_t features, std::uint64_t seed) {
  numkit::Rng rng(seed, "synth/sensors");
  SensorLayout layout;
  for (std::size_t d = 0; d < features; ++d) {
    layout.level.push_back(rng.uniform(-5.0, 5.0));
    layout.gain.push_back(rng.uniform(0.5, 2.0));
  }
  return layout;
}

void check_config(const SynthConfig& c) {
  if (c.features < 2) throw ConfigError("synthetic generator needs D >= 2");
  if (c.steps < 16) throw ConfigError("synthetic generator needs T >= 16");
  if (c.runs == 0) throw ConfigError("synthetic generator needs at least one run");
  if (c.fault_kind != FaultKind::None && c.fault_onset >= c.steps) {
    throw ConfigError("fault onset must lie inside the run");
  }
  if (!(c.fault_magnitude >= 0.0)) throw ConfigError("fault magnitude must be non-negative");
}

}  // namespace

FaultKind parse_fault_kind(std::string_view name) {
  if (name == "none") return FaultKind::None;
  if (name == "step") return FaultKind::Step;
  if (name == "drift") return FaultKind::Drift;
  if (name == "stuck") return FaultKind::Stuck;
  if (name == "noise") return FaultKind::Noise;
  throw ConfigError("unknown fault kind '" + std::string(name) + "' (expected none, step, drift, stuck, noise)");
}

std::string fault_kind_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::None: return "none";
    case FaultKind::Step: return "step";
    case FaultKind::Drift: return "drift";
    case FaultKind::Stuck: return "stuck";
    case FaultKind::Noise: return "noise";
  }
  return "none";
}

int fault_id_of(FaultKind kind) {
  switch (kind) {
    case FaultKind::None: return 0;
    case FaultKind::Step: return 1;
    case FaultKind::Drift: return 2;
    case FaultKind::Stuck: return 3;
    case FaultKind::Noise: return 4;
  }
  return 0;
}

std::vector<double> synth_coupling_matrix(std::size_t features, std::uint64_t seed) {
  numkit::Rng rng(seed, "synth/coupling");
  Eigen::MatrixXd g(features, features);
  for (std::size_t i = 0; i < features; ++i) {
    for (std::size_t j = 0; j < features; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  std::vector<double> a(features * features);
  for (std::size_t i = 0; i < features; ++i) {
    for (std::size_t j = 0; j < features; ++j) {
      a[i * features + j] = kSpectralRadius * q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return a;
}

std::vector<std::size_t> synth_fault_features(const SynthConfig& config) {
  std::vector<std::size_t> order(config.features);
  std::iota(order.begin(), order.end(), std::size_t{0});
  numkit::Rng rng(config.seed, "synth/fault-features");
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(std::max<std::size_t>(1, config.features / 4));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<double> synth_sensor_std(const SynthConfig& config) {
  // A A^T = 0.81 I, so the stationary latent covariance is I / (1 - 0.81).
  const double latent_var = 1.0 / (1.0 - kSpectralRadius * kSpectralRadius);
  const double base = std::sqrt(latent_var + kMeasurementStd * kMeasurementStd);
  const auto layout = sensor_layout(config.features, config.seed);
  std::vector<double> out;
  for (double g : layout.gain) out.push_back(g * base);
  return out;
}

std::vector<RunRecord> synth_generate(const SynthConfig& config) {
  check_config(config);
  const std::size_t d = config.features, steps = config.steps;
  const auto a = synth_coupling_matrix(d, config.seed);
  const auto layout = sensor_layout(d, config.seed);
  const auto sensor_std = synth_sensor_std(config);
  const auto faulty = synth_fault_features(config);
  const double stationary_std = 1.0 / std::sqrt(1.0 - kSpectralRadius * kSpectralRadius);

  std::vector<RunRecord> runs;
  runs.reserve(config.runs);
  for (std::size_t r = 0; r < config.runs; ++r) {
    const std::uint32_t run_id = config.first_run_id + static_cast<std::uint32_t>(r);
    numkit::Rng rng = numkit::Rng(config.seed, "synth/run").derive(run_id);
    numkit::Rng fault_rng = numkit::Rng(config.seed, "synth/fault-noise").derive(run_id);

    std::vector<double> state(d), next(d), values(steps * d);
    for (double& s : state) s = rng.normal(0.0, stationary_std);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        values[t * d + j] = layout.level[j] + layout.gain[j] * (state[j] + rng.normal(0.0, kMeasurementStd));
      }
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * state[j];
        next[i] = acc + rng.normal();
      }
      state.swap(next);
    }

    std::optional<Labels> labels = Labels(steps, 0);
    if (config.fault_kind != FaultKind::None) {
      const std::size_t onset = config.fault_onset;
      std::fill(labels->begin() + static_cast<std::ptrdiff_t>(onset), labels->end(), 1);
      for (std::size_t j : faulty) {
        const double amount = config.fault_magnitude * sensor_std[j];
        const double frozen = values[onset * d + j];
        for (std::size_t t = onset; t < steps; ++t) {
          double& v = values[t * d + j];
          switch (config.fault_kind) {
            case FaultKind::Step:
              v += amount;
              break;
            case FaultKind::Drift:
              v += amount * static_cast<double>(t - onset + 1) / static_cast<double>(steps - onset);
              break;
            case FaultKind::Stuck:
              v = frozen;
              break;
            case FaultKind::Noise:
              v += fault_rng.normal(0.0, amount);
              break;
            case FaultKind::None:
              break;
          }
        }
      }
    }
    runs.push_back({run_id, fault_id_of(config.fault_kind), SeriesMatrix(steps, d, std::move(values), 3.0, labels)});
  }
  return runs;
}

}  // namespace tsad::dataio
