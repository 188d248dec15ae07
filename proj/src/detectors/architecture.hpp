#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "tsad/detectors/detector.hpp"
#include "tsad/numkit/layers.hpp"
#include "tsad/numkit/loss.hpp"
#include "tsad/numkit/optim.hpp"
#include "tsad/numkit/rng.hpp"

namespace tsad::detectors::internal {

namespace nk = numkit;

/// A batch of windows. `input` holds the first w rows of each window,
/// `future` the rows after them (forecasters only), `full` everything.
struct Batch {
  nk::Tensor input;   // [n, w, D]
  nk::Tensor future;  // [n, h, D] or empty
  nk::Tensor full;    // [n, w + h, D]
  std::vector<std::size_t> starts;

  std::size_t size() const { return starts.size(); }
};

Batch make_batch(const std::vector<dataio::Window>& windows, const std::vector<std::size_t>& indices,
                 std::size_t input_steps);

/// Rows [begin, begin + count) along time of an [n, T, C] tensor.
nk::Tensor time_slice(const nk::Tensor& seq, std::size_t begin, std::size_t count);

struct TrainContext {
  nk::ParamStore& store;
  std::vector<nk::Optimizer>& optimizers;
  std::size_t epoch = 1;  // 1-based
  nk::Rng rng;
};

class Architecture {
 public:
  Architecture(const DetectorSpec& spec, std::size_t features) : spec_(spec), d_(features) {}
  virtual ~Architecture() = default;

  virtual void declare(nk::ParamStore& store) const = 0;
  std::size_t input_steps() const { return spec_.window.width; }
  /// Rows needed after the input window (forecast targets).
  virtual std::size_t horizon() const { return 0; }
  virtual bool trains() const { return true; }
  virtual bool calibrated() const { return false; }

  virtual std::vector<nk::Optimizer> make_optimizers(const nk::ParamStore& store) const;
  /// One update on a batch; returns the loss value recorded for it.
  virtual double train_step(TrainContext& ctx, const Batch& batch) const;
  /// Objective minimized by the default train_step.
  virtual nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng& rng) const;

  /// Row-major N x D error vectors used to fit the Gaussian calibration.
  virtual std::vector<double> calibration_errors(nk::ParamStore& store, const Batch& batch) const;

  /// Scores of each window, addressed to absolute time steps.
  virtual std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                           const std::optional<scoring::GaussianModel>& calibration,
                                                           nk::Rng& rng) const;
  /// Whole-series scores from a normalized series. The default aggregates
  /// window_scores over stride-1 windows.
  virtual ScoreSeries score_series(nk::ParamStore& store, const dataio::SeriesMatrix& normalized,
                                   const std::optional<scoring::GaussianModel>& calibration, nk::Rng& rng) const;

 protected:
  nk::OptimConfig optim_config() const;
  nk::OptimConfig optim_config_with(double learning_rate) const;
  double apply(nk::Tape& tape, nk::Var loss, nk::ParamStore& store, nk::Optimizer& opt) const;

  DetectorSpec spec_;
  std::size_t d_;
};

std::unique_ptr<Architecture> make_architecture(const DetectorSpec& spec, std::size_t features);

// Per-variant factories.
std::unique_ptr<Architecture> make_dense_ae(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_usad(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_donut(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_lstm_ae(const DetectorSpec&, std::size_t, bool trained);
std::unique_ptr<Architecture> make_lstm_max_ae(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_lstm_p(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_lstm_vae(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_lstm_dvae(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_tcn_s2s_ae(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_tcn_p(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_tcn_s2s_p(const DetectorSpec&, std::size_t);
std::unique_ptr<Architecture> make_beatgan(const DetectorSpec&, std::size_t);

// Shared building blocks.
nk::Var flatten(nk::Var seq);                                    // [N, T, C] -> [N, T*C]
nk::Var unflatten(nk::Var x, std::size_t steps, std::size_t channels);
/// Mean squared difference per window of two [n, T, C] tensors.
std::vector<double> window_mse(const nk::Tensor& a, const nk::Tensor& b);
/// Score landing on the last step of each window.
std::vector<scoring::OverlapScore> at_last_step(const Batch& batch, std::size_t input_steps,
                                                const std::vector<double>& values);
nk::LstmState zero_state(nk::Tape& tape, std::size_t n, std::size_t hidden);
/// Runs an LSTM over every time step; returns the hidden state per step.
std::vector<nk::Var> run_lstm(const nk::LstmParams& params, nk::Var seq, nk::LstmState& state);
std::vector<nk::Var> run_lstm(const nk::LstmParams& params, const std::vector<nk::Var>& inputs, nk::LstmState& state);
/// z = mean + exp(0.5 log_var) * eps with eps ~ N(0, I) drawn from rng.
nk::Var reparameterize(nk::Tape& tape, nk::Var mean, nk::Var log_var, nk::Rng& rng);
nk::Tensor standard_normal(const nk::Shape& shape, nk::Rng& rng);

/// Log-variance heads are squashed into (-kLogVarBound, kLogVarBound).
inline constexpr double kLogVarBound = 6.0;

}  // namespace tsad::detectors::internal
