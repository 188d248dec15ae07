#include <algorithm>
#include <cmath>

#include "architecture.hpp"
#include "tsad/errors.hpp"

namespace tsad::detectors::internal {

namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kAePool = 4;

nk::Var leaky(nk::Var x) { return nk::leaky_relu(x, 0.2); }

/// Causal TCN encoder (dilations 1, 2, 4), average pooling and a width-1
/// bottleneck; the decoder upsamples and runs convolutions over reversed
/// time, the transposed counterpart of the causal encoder.
struct TcnAutoencoder {
  std::string prefix;
  std::size_t features, hidden, latent;

  void declare(nk::ParamStore& store) const {
    nk::declare_conv(store, prefix + "/enc0", kKernel, features, hidden);
    nk::declare_conv(store, prefix + "/enc1", kKernel, hidden, hidden);
    nk::declare_conv(store, prefix + "/enc2", kKernel, hidden, hidden);
    nk::declare_conv(store, prefix + "/bottleneck", 1, hidden, latent);
    nk::declare_conv(store, prefix + "/dec0", kKernel, latent, hidden);
    nk::declare_conv(store, prefix + "/dec1", kKernel, hidden, hidden);
    nk::declare_conv(store, prefix + "/out", 1, hidden, features);
  }

  nk::Var operator()(nk::Tape& tape, nk::ParamStore& store, nk::Var x) const {
    auto h = leaky(nk::conv(tape, store, prefix + "/enc0", x, 1));
    h = leaky(nk::conv(tape, store, prefix + "/enc1", h, 2));
    h = leaky(nk::conv(tape, store, prefix + "/enc2", h, 4));
    auto z = nk::conv(tape, store, prefix + "/bottleneck", nk::avg_pool_time(h, kAePool), 1);
    auto r = nk::reverse_time(nk::upsample_time(z, kAePool));
    r = leaky(nk::conv(tape, store, prefix + "/dec0", r, 1));
    r = leaky(nk::conv(tape, store, prefix + "/dec1", r, 2));
    return nk::reverse_time(nk::conv(tape, store, prefix + "/out", r, 1));
  }
};

void require_pool_multiple(const DetectorSpec& spec, std::size_t factor) {
  if (spec.window.width % factor != 0 || spec.window.width < factor) {
    throw ConfigError(display_name(spec.variant) + " needs a window width divisible by " + std::to_string(factor) +
                      ", got " + std::to_string(spec.window.width));
  }
}

std::vector<double> residuals(const nk::Tensor& target, const nk::Tensor& pred) {
  std::vector<double> out(target.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = target.values()[i] - pred.values()[i];
  return out;
}

class TcnS2SAE final : public Architecture {
 public:
  TcnS2SAE(const DetectorSpec& spec, std::size_t d)
      : Architecture(spec, d), ae_{"ae", d, spec.hidden_size, spec.latent_dim} {
    require_pool_multiple(spec, kAePool);
  }

  bool calibrated() const override { return true; }
  void declare(nk::ParamStore& store) const override { ae_.declare(store); }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    auto x = tape.constant(batch.input);
    return nk::loss(ae_(tape, store, x), x, nk::LossKind::LogCosh);
  }

  std::vector<double> calibration_errors(nk::ParamStore& store, const Batch& batch) const override {
    nk::Tape tape(false);
    return residuals(batch.input, ae_(tape, store, tape.constant(batch.input)).value());
  }

  /// Mean over the window's steps of the calibrated NLL of each residual.
  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>& calibration,
                                                   nk::Rng&) const override {
    const auto err = calibration_errors(store, batch);
    const std::size_t w = input_steps();
    std::vector<double> s(batch.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t t = 0; t < w; ++t) {
        s[i] += scoring::nll(*calibration, std::span<const double>(err).subspan((i * w + t) * d_, d_));
      }
      s[i] /= static_cast<double>(w);
    }
    return at_last_step(batch, w, s);
  }

 private:
  TcnAutoencoder ae_;
};

/// DeepANT: max-pooling TCN and an MLP head forecasting k steps. Trained
/// with MAE; overlapping forecasts of a step are averaged before the MSE.
class TcnP final : public Architecture {
 public:
  TcnP(const DetectorSpec& spec, std::size_t d) : Architecture(spec, d) { require_pool_multiple(spec, 4); }

  std::size_t horizon() const override { return spec_.horizon; }

  void declare(nk::ParamStore& store) const override {
    const std::size_t h = spec_.hidden_size;
    nk::declare_conv(store, "conv0", kKernel, d_, h);
    nk::declare_conv(store, "conv1", kKernel, h, h);
    nk::declare_linear(store, "fc0", (input_steps() / 4) * h, h);
    nk::declare_linear(store, "fc1", h, spec_.horizon * d_);
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    return nk::loss(predict(tape, store, batch), tape.constant(batch.future), nk::LossKind::MAE);
  }

  ScoreSeries score_series(nk::ParamStore& store, const dataio::SeriesMatrix& normalized,
                           const std::optional<scoring::GaussianModel>&, nk::Rng&) const override {
    const std::size_t w = input_steps(), k = spec_.horizon, steps = normalized.steps();
    if (steps < w + k) throw ContractError("series is shorter than one forecasting window");
    const auto windows = dataio::make_windows(normalized, {w + k, 1});
    std::vector<double> sum(steps * d_, 0.0);
    std::vector<std::size_t> count(steps, 0);
    for (std::size_t begin = 0; begin < windows.size(); begin += 256) {
      std::vector<std::size_t> idx;
      for (std::size_t i = begin; i < std::min(windows.size(), begin + 256); ++i) idx.push_back(i);
      const auto batch = make_batch(windows, idx, w);
      nk::Tape tape(false);
      const auto& pred = predict(tape, store, batch).value().values();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t t = batch.starts[i] + w + j;
          ++count[t];
          for (std::size_t c = 0; c < d_; ++c) sum[t * d_ + c] += pred[(i * k + j) * d_ + c];
        }
      }
    }
    std::vector<std::optional<double>> mse(steps);
    ScoreSeries out;
    out.warmup = steps;
    for (std::size_t t = 0; t < steps; ++t) {
      if (count[t] == 0) continue;
      out.warmup = std::min(out.warmup, t);
      double acc = 0.0;
      for (std::size_t c = 0; c < d_; ++c) {
        const double e = sum[t * d_ + c] / static_cast<double>(count[t]) - normalized.at(t, c);
        acc += e * e;
      }
      mse[t] = acc / static_cast<double>(d_);
    }
    out.scores = scoring::fill_uncovered(mse);
    return out;
  }

 private:
  nk::Var predict(nk::Tape& tape, nk::ParamStore& store, const Batch& batch) const {
    auto h = nk::max_pool_time(nk::relu(nk::conv(tape, store, "conv0", tape.constant(batch.input), 1)), 2);
    h = nk::max_pool_time(nk::relu(nk::conv(tape, store, "conv1", h, 1)), 2);
    auto y = nk::linear(tape, store, "fc1", nk::relu(nk::linear(tape, store, "fc0", flatten(h))));
    return nk::reshape(y, {batch.size(), spec_.horizon, d_});
  }
};

/// Dilated causal TCN whose last three layer outputs are concatenated and
/// mapped by a width-1 convolution with D filters to the series shifted by
/// one step. Online score: calibrated NLL of the last position's residual.
class TcnS2SP final : public Architecture {
 public:
  using Architecture::Architecture;

  std::size_t horizon() const override { return 1; }
  bool calibrated() const override { return true; }

  void declare(nk::ParamStore& store) const override {
    const std::size_t h = spec_.hidden_size;
    nk::declare_conv(store, "tcn0", kKernel, d_, h);
    nk::declare_conv(store, "tcn1", kKernel, h, h);
    nk::declare_conv(store, "tcn2", kKernel, h, h);
    nk::declare_conv(store, "out", 1, 3 * h, d_);
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    auto target = tape.constant(time_slice(batch.full, 1, input_steps()));
    return nk::loss(predict(tape, store, batch), target, nk::LossKind::MSE);
  }

  std::vector<double> calibration_errors(nk::ParamStore& store, const Batch& batch) const override {
    nk::Tape tape(false);
    const auto last = time_slice(predict(tape, store, batch).value(), input_steps() - 1, 1);
    return residuals(batch.future, last);
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>& calibration,
                                                   nk::Rng&) const override {
    const auto err = calibration_errors(store, batch);
    std::vector<scoring::OverlapScore> out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out.push_back({batch.starts[i] + input_steps(),
                     {scoring::nll(*calibration, std::span<const double>(err).subspan(i * d_, d_))}});
    }
    return out;
  }

 private:
  nk::Var predict(nk::Tape& tape, nk::ParamStore& store, const Batch& batch) const {
    auto h0 = leaky(nk::conv(tape, store, "tcn0", tape.constant(batch.input), 1));
    auto h1 = leaky(nk::conv(tape, store, "tcn1", h0, 2));
    auto h2 = leaky(nk::conv(tape, store, "tcn2", h1, 4));
    return nk::conv(tape, store, "out", nk::concat_last({h0, h1, h2}), 1);
  }
};

/// TCN autoencoder generator against a TCN discriminator. The generator
/// minimizes reconstruction MSE plus lambda times the MSE between the
/// discriminator's penultimate features of real and reconstructed windows.
class BeatGAN final : public Architecture {
 public:
  BeatGAN(const DetectorSpec& spec, std::size_t d)
      : Architecture(spec, d), gen_{"gen", d, spec.hidden_size, spec.latent_dim} {
    require_pool_multiple(spec, kAePool);
  }

  void declare(nk::ParamStore& store) const override {
    gen_.declare(store);
    nk::declare_conv(store, "disc/c0", kKernel, d_, spec_.hidden_size);
    nk::declare_conv(store, "disc/c1", kKernel, spec_.hidden_size, spec_.hidden_size);
    nk::declare_linear(store, "disc/out", spec_.hidden_size, 1);
  }

  std::vector<nk::Optimizer> make_optimizers(const nk::ParamStore& store) const override {
    std::vector<nk::Optimizer> out;
    out.emplace_back(optim_config(), store, store.names_with_prefix("gen/"));
    out.emplace_back(optim_config(), store, store.names_with_prefix("disc/"));
    return out;
  }

  double train_step(TrainContext& ctx, const Batch& batch) const override {
    const std::size_t n = batch.size();
    {
      nk::Tape tape;
      auto x = tape.constant(batch.input);
      auto fake = nk::detach(gen_(tape, ctx.store, x));
      auto real_logit = logit(tape, ctx.store, features(tape, ctx.store, x));
      auto fake_logit = logit(tape, ctx.store, features(tape, ctx.store, fake));
      auto l = nk::add(nk::bce_with_logits(real_logit, tape.constant(nk::Tensor({n, 1}, 1.0))),
                       nk::bce_with_logits(fake_logit, tape.constant(nk::Tensor({n, 1}, 0.0))));
      const double v = apply(tape, l, ctx.store, ctx.optimizers[1]);
      if (!std::isfinite(v)) return v;
    }
    nk::Tape tape;
    auto x = tape.constant(batch.input);
    auto rec = gen_(tape, ctx.store, x);
    auto feature_gap = nk::loss(features(tape, ctx.store, rec), nk::detach(features(tape, ctx.store, x)), nk::LossKind::MSE);
    auto l = nk::add(nk::loss(rec, x, nk::LossKind::MSE), nk::scale(feature_gap, spec_.lambda));
    return apply(tape, l, ctx.store, ctx.optimizers[0]);
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng&) const override {
    nk::Tape tape(false);
    auto rec = gen_(tape, store, tape.constant(batch.input));
    return at_last_step(batch, input_steps(), window_mse(rec.value(), batch.input));
  }

 private:
  nk::Var features(nk::Tape& tape, nk::ParamStore& store, nk::Var x) const {
    auto h = leaky(nk::conv(tape, store, "disc/c0", x, 1));
    h = leaky(nk::conv(tape, store, "disc/c1", h, 2));
    return nk::mean_over_time(h);
  }
  nk::Var logit(nk::Tape& tape, nk::ParamStore& store, nk::Var features) const {
    return nk::linear(tape, store, "disc/out", features);
  }

  TcnAutoencoder gen_;
};

}  // namespace

std::unique_ptr<Architecture> make_tcn_s2s_ae(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<TcnS2SAE>(spec, d);
}
std::unique_ptr<Architecture> make_tcn_p(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<TcnP>(spec, d);
}
std::unique_ptr<Architecture> make_tcn_s2s_p(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<TcnS2SP>(spec, d);
}
std::unique_ptr<Architecture> make_beatgan(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<BeatGAN>(spec, d);
}

}  // namespace tsad::detectors::internal
