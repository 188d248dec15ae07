#include "tsad/detectors/detector.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <span>

#include "architecture.hpp"
#include "tsad/errors.hpp"

namespace tsad::detectors {

namespace {

struct VariantInfo {
  Variant variant;
  const char* id;
  const char* display;
  Family family;
};

constexpr VariantInfo kVariants[] = {
    {Variant::DenseAE, "dense_ae", "Dense-AE", Family::Reconstruction},
    {Variant::LstmAE, "lstm_ae", "LSTM-AE", Family::Reconstruction},
    {Variant::LstmMaxAE, "lstm_max_ae", "LSTM-Max-AE", Family::Reconstruction},
    {Variant::UntrainedLstmAE, "untrained_lstm_ae", "Untrained-LSTM-AE", Family::Reconstruction},
    {Variant::USAD, "usad", "USAD", Family::Reconstruction},
    {Variant::TcnS2SAE, "tcn_s2s_ae", "TCN-S2S-AE", Family::Reconstruction},
    {Variant::LstmP, "lstm_p", "LSTM-P", Family::Forecasting},
    {Variant::TcnP, "tcn_p", "DeepANT/TCN-P", Family::Forecasting},
    {Variant::TcnS2SP, "tcn_s2s_p", "TCN-S2S-P", Family::Forecasting},
    {Variant::LstmVAE, "lstm_vae", "LSTM-VAE", Family::GenerativeVae},
    {Variant::DonutMV, "donut", "Donut", Family::GenerativeVae},
    {Variant::LstmDVAE, "lstm_dvae", "LSTM-DVAE", Family::GenerativeVae},
    {Variant::BeatGAN, "beatgan", "BeatGAN", Family::GenerativeGan},
};

const VariantInfo& info(Variant v) {
  for (const auto& i : kVariants) {
    if (i.variant == v) return i;
  }
  throw ConfigError("unknown detector variant");
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<dataio::Window> normalized_windows(const std::vector<dataio::RunRecord>& runs, const dataio::NormStats& norm,
                                               std::size_t rows, std::size_t stride) {
  std::vector<dataio::Window> out;
  for (const auto& run : runs) {
    if (run.series.steps() < rows) continue;
    auto w = dataio::make_windows(dataio::apply_norm(run.series, norm), {rows, stride});
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<std::vector<std::size_t>> chunks(std::vector<std::size_t> order, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < order.size(); b += size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + size)));
  }
  return out;
}

bool same_layout(const numkit::ParamStore& a, const numkit::ParamStore& b) {
  if (a.names() != b.names()) return false;
  for (const auto& [name, t] : a) {
    if (t.shape() != b.get(name).shape()) return false;
  }
  return true;
}

}  // namespace

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = [] {
    std::vector<Variant> v;
    for (const auto& i : kVariants) v.push_back(i.variant);
    return v;
  }();
  return variants;
}

std::string display_name(Variant v) { return info(v).display; }
std::string variant_id(Variant v) { return info(v).id; }
Family family_of(Variant v) { return info(v).family; }
bool is_forecaster(Variant v) { return family_of(v) == Family::Forecasting; }

std::string family_name(Family f) {
  switch (f) {
    case Family::Reconstruction: return "Reconstruction";
    case Family::Forecasting: return "Forecasting";
    case Family::GenerativeVae: return "Generative-VAE";
    case Family::GenerativeGan: return "Generative-GAN";
  }
  return "Reconstruction";
}

Variant parse_variant(std::string_view name) {
  const auto key = lower(name);
  for (const auto& i : kVariants) {
    if (key == i.id || key == lower(i.display)) return i.variant;
  }
  throw ConfigError("unknown detector '" + std::string(name) + "'");
}

DetectorSpec default_spec(Variant v) {
  DetectorSpec spec;
  spec.variant = v;
  if (v == Variant::LstmP) spec.layers = 2;
  return spec;
}

void validate_spec(const DetectorSpec& spec) {
  auto fail = [&](const std::string& what) { throw ConfigError(display_name(spec.variant) + ": " + what); };
  if (spec.window.width < 2) fail("window width must be at least 2");
  if (spec.window.stride == 0) fail("window stride must be positive");
  if (spec.hidden_size == 0 || spec.latent_dim == 0) fail("hidden_size and latent_dim must be positive");
  if (spec.layers == 0) fail("layers must be positive");
  if (!(spec.learning_rate > 0.0) || !std::isfinite(spec.learning_rate)) fail("learning_rate must be positive");
  if (is_forecaster(spec.variant) && spec.horizon == 0) fail("horizon k must be >= 1");
  if (spec.mc_samples == 0) fail("mc_samples must be >= 1");
  if (spec.batch_size == 0) fail("batch_size must be positive");
  if (spec.alpha < 0.0 || spec.beta < 0.0 || spec.lambda < 0.0) fail("trade-off weights must be non-negative");
  if (spec.noise_std < 0.0) fail("noise_std must be non-negative");
  if (!(spec.mask_rate >= 0.0 && spec.mask_rate < 1.0)) fail("mask_rate must lie in [0, 1)");
  if (!(spec.grad_clip > 0.0)) fail("grad_clip must be positive");
}

numkit::ParamStore initial_params(const DetectorSpec& spec, std::size_t features) {
  validate_spec(spec);
  numkit::ParamStore store(spec.seed);
  internal::make_architecture(spec, features)->declare(store);
  return store;
}

FittedDetector fit(const DetectorSpec& spec, const dataio::DatasetSplit& data, const FitOptions& options) {
  validate_spec(spec);
  if (data.train.empty()) throw ContractError("fit needs at least one training run");
  const std::size_t d = data.train.front().series.features();
  for (const auto& r : data.train) {
    if (r.series.features() != d) throw ContractError("training runs disagree on feature count");
  }
  if (family_of(spec.variant) != Family::Forecasting && spec.latent_dim >= spec.window.width * d) {
    throw ConfigError(display_name(spec.variant) + ": latent_dim must be smaller than window * D");
  }
  const auto arch = internal::make_architecture(spec, d);

  FittedDetector model{spec, d, initial_params(spec, d), std::nullopt, dataio::fit_norm_stats(data.train), {}, 0};
  if (options.initial_params) {
    if (!same_layout(*options.initial_params, model.params)) {
      throw ContractError("initial parameters do not match the architecture");
    }
    model.params = *options.initial_params;
  }

  const std::size_t rows = arch->input_steps() + arch->horizon();
  const auto windows = normalized_windows(data.train, model.norm, rows, spec.window.stride);
  if (windows.empty()) throw ContractError("training runs are shorter than one window of " + std::to_string(rows));

  if (arch->trains()) {
    auto optimizers = arch->make_optimizers(model.params);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
      numkit::Rng(spec.seed, "fit/shuffle").derive(epoch).shuffle(std::span<std::size_t>(order));
      internal::TrainContext ctx{model.params, optimizers, epoch, numkit::Rng(spec.seed, "fit/batch").derive(epoch)};
      double total = 0.0;
      for (const auto& idx : chunks(order, spec.batch_size)) {
        const double l = arch->train_step(ctx, internal::make_batch(windows, idx, arch->input_steps()));
        if (!std::isfinite(l)) throw TrainingError("non-finite training loss", epoch);
        total += l * static_cast<double>(idx.size());
      }
      model.loss_history.push_back(total / static_cast<double>(windows.size()));
    }
    for (const auto& o : optimizers) model.optimizer_steps += o.steps();
  }

  if (arch->calibrated()) {
    if (data.validation.empty()) throw ContractError(display_name(spec.variant) + " needs validation runs for calibration");
    const auto val = normalized_windows(data.validation, model.norm, rows, spec.window.stride);
    if (val.empty()) throw ContractError("validation runs are shorter than one window");
    std::vector<double> errors;
    std::vector<std::size_t> order(val.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (const auto& idx : chunks(order, 256)) {
      const auto e = arch->calibration_errors(model.params, internal::make_batch(val, idx, arch->input_steps()));
      errors.insert(errors.end(), e.begin(), e.end());
    }
    model.calibration = scoring::fit_gaussian(errors, d);
  }
  return model;
}

ScoreSeries score(const FittedDetector& model, const dataio::SeriesMatrix& series) {
  if (series.features() != model.features) {
    throw ContractError("series has " + std::to_string(series.features()) + " features, detector was trained on " +
                        std::to_string(model.features));
  }
  const auto arch = internal::make_architecture(model.spec, model.features);
  if (arch->calibrated() && !model.calibration) throw ContractError("detector is missing its calibration");
  numkit::ParamStore params = model.params;
  numkit::Rng rng(model.spec.seed, "score");
  auto out = arch->score_series(params, dataio::apply_norm(series, model.norm), model.calibration, rng);
  for (double s : out.scores) {
    if (!std::isfinite(s)) throw NumericError(display_name(model.spec.variant) + " produced a non-finite score");
  }
  return out;
}

dataio::Window lstm_ae_target(const dataio::Window& window) {
  dataio::Window out = window;
  for (std::size_t t = 0; t < window.steps; ++t) {
    for (std::size_t c = 0; c < window.features; ++c) out.at(t, c) = window.at(window.steps - 1 - t, c);
  }
  return out;
}

std::vector<double> dvae_prior_mean(const std::vector<double>& v1, const std::vector<double>& vt, double t, double T) {
  if (v1.size() != vt.size()) throw DimensionError("v1 and vT differ in length");
  if (!(T > 0.0)) throw ContractError("T must be positive");
  std::vector<double> out(v1.size());
  const double r = t / T;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - r) * v1[i] + r * vt[i];
  return out;
}

}  // namespace tsad::detectors
