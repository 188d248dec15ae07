#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/dataio/norm.hpp"
#include "tsad/dataio/series.hpp"
#include "tsad/dataio/windows.hpp"
#include "tsad/numkit/param_store.hpp"
#include "tsad/scoring/scoring.hpp"

namespace tsad::detectors {

enum class Variant {
  DenseAE,
  LstmAE,
  LstmMaxAE,
  UntrainedLstmAE,
  USAD,
  TcnS2SAE,
  LstmP,
  TcnP,
  TcnS2SP,
  LstmVAE,
  DonutMV,
  LstmDVAE,
  BeatGAN,
};

enum class Family { Reconstruction, Forecasting, GenerativeVae, GenerativeGan };

/// Every variant, in declaration order.
const std::vector<Variant>& all_variants();
/// Display name, e.g. "LSTM-AE", "DeepANT/TCN-P".
std::string display_name(Variant v);
/// Identifier used in configs and files, e.g. "lstm_ae", "tcn_p".
std::string variant_id(Variant v);
/// Accepts the identifier or the display name (case-insensitive);
/// ConfigError otherwise.
Variant parse_variant(std::string_view name);
Family family_of(Variant v);
/// "Reconstruction", "Forecasting", "Generative-VAE", "Generative-GAN".
std::string family_name(Family f);
bool is_forecaster(Variant v);

enum class Pooling { Max, Mean };

struct DetectorSpec {
  Variant variant = Variant::DenseAE;
  dataio::WindowSpec window{32, 1};  // stride applies to training windows
  std::size_t hidden_size = 32;
  std::size_t latent_dim = 8;
  std::size_t layers = 1;
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::size_t horizon = 1;
  std::size_t mc_samples = 16;
  double alpha = 0.5;   // USAD weight of the AE1 error
  double beta = 0.5;    // USAD weight of the AE2(AE1) error
  double lambda = 1.0;  // BeatGAN feature-matching weight
  std::size_t batch_size = 32;
  double noise_std = 0.1;   // LstmDVAE input noise
  double mask_rate = 0.05;  // DonutMV cell masking
  Pooling pooling = Pooling::Max;
  double grad_clip = 5.0;
  std::uint64_t seed = 0;
};

/// Desk-scale defaults for a variant (LstmP gets two layers).
DetectorSpec default_spec(Variant v);

/// Checks ranges that do not depend on the data; ConfigError on failure.
void validate_spec(const DetectorSpec& spec);

struct FittedDetector {
  DetectorSpec spec;
  std::size_t features = 0;
  numkit::ParamStore params;
  std::optional<scoring::GaussianModel> calibration;
  dataio::NormStats norm;
  std::vector<double> loss_history;  // mean training loss per epoch
  std::size_t optimizer_steps = 0;
};

struct ScoreSeries {
  std::vector<double> scores;
  /// Leading steps that carry a copied score rather than their own.
  std::size_t warmup = 0;
};

struct FitOptions {
  /// Start from these parameters instead of the seeded initialization.
  const numkit::ParamStore* initial_params = nullptr;
};

/// Parameters a variant declares for D features, freshly initialized.
numkit::ParamStore initial_params(const DetectorSpec& spec, std::size_t features);

/// Normalizes with training statistics, trains on windows of the training
/// runs and, for Gaussian-calibrated variants, fits the calibration on
/// validation-window errors.
FittedDetector fit(const DetectorSpec& spec, const dataio::DatasetSplit& data, const FitOptions& options = {});

/// Per-step anomaly scores for a raw (unnormalized) series. Each window's
/// score lands on its last step (or on its forecast targets); leading steps
/// copy the first score.
ScoreSeries score(const FittedDetector& model, const dataio::SeriesMatrix& series);

/// Sequence an LstmAE decoder is trained to emit for a window: the window
/// reversed along time.
dataio::Window lstm_ae_target(const dataio::Window& window);

/// Prior mean of LstmDVAE at step t of T: (1 - t/T) v1 + (t/T) vT.
std::vector<double> dvae_prior_mean(const std::vector<double>& v1, const std::vector<double>& vt, double t, double T);

void save_detector(std::ostream& out, const FittedDetector& model);
FittedDetector load_detector(std::istream& in);
void save_detector(const std::filesystem::path& path, const FittedDetector& model);
FittedDetector load_detector(const std::filesystem::path& path);

}  // namespace tsad::detectors
