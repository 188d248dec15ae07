#include <cmath>
#include <numbers>

#include "architecture.hpp"
#include "tsad/errors.hpp"

namespace tsad::detectors::internal {

namespace {

/// Encoder final state seeds the decoder, which emits the window in reverse
/// order. Teacher forcing feeds the true previous target while training;
/// at test time the decoder consumes its own previous output.
class LstmAE final : public Architecture {
 public:
  LstmAE(const DetectorSpec& spec, std::size_t d, bool trained) : Architecture(spec, d), trained_(trained) {}

  bool trains() const override { return trained_; }

  void declare(nk::ParamStore& store) const override {
    nk::declare_lstm(store, "enc", d_, spec_.hidden_size);
    nk::declare_lstm(store, "dec", d_, spec_.hidden_size);
    nk::declare_linear(store, "out", spec_.hidden_size, d_);
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    auto target = nk::reverse_time(tape.constant(batch.input));
    return nk::loss(reconstruct(tape, store, batch, target, true), target, nk::LossKind::MSE);
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng&) const override {
    nk::Tape tape(false);
    auto target = nk::reverse_time(tape.constant(batch.input));
    auto rec = reconstruct(tape, store, batch, target, false);
    return at_last_step(batch, input_steps(), window_mse(rec.value(), target.value()));
  }

 private:
  nk::Var reconstruct(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Var target, bool teacher) const {
    const std::size_t n = batch.size(), w = input_steps();
    auto state = zero_state(tape, n, spec_.hidden_size);
    run_lstm(nk::lstm_params(tape, store, "enc"), tape.constant(batch.input), state);
    const auto dec = nk::lstm_params(tape, store, "dec");
    std::vector<nk::Var> outputs;
    for (std::size_t i = 0; i < w; ++i) {
      outputs.push_back(nk::linear(tape, store, "out", state.h));
      if (i + 1 < w) state = nk::lstm_cell_step(teacher ? nk::time_step(target, i) : outputs.back(), state, dec);
    }
    return nk::stack_time(outputs);
  }

  bool trained_;
};

/// Max (or mean) of the encoder hidden states, fed to the decoder at every
/// step; reconstruction in the original order.
class LstmMaxAE final : public Architecture {
 public:
  using Architecture::Architecture;

  void declare(nk::ParamStore& store) const override {
    nk::declare_lstm(store, "enc", d_, spec_.hidden_size);
    nk::declare_lstm(store, "dec", spec_.hidden_size, spec_.hidden_size);
    nk::declare_linear(store, "out", spec_.hidden_size, d_);
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    auto x = tape.constant(batch.input);
    return nk::loss(reconstruct(tape, store, x), x, nk::LossKind::MSE);
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng&) const override {
    nk::Tape tape(false);
    auto x = tape.constant(batch.input);
    return at_last_step(batch, input_steps(), window_mse(reconstruct(tape, store, x).value(), batch.input));
  }

 private:
  nk::Var reconstruct(nk::Tape& tape, nk::ParamStore& store, nk::Var x) const {
    const std::size_t n = x.dim(0), w = x.dim(1), h = spec_.hidden_size;
    auto state = zero_state(tape, n, h);
    auto hidden = nk::stack_time(run_lstm(nk::lstm_params(tape, store, "enc"), x, state));
    auto latent = spec_.pooling == Pooling::Max ? nk::max_over_time(hidden) : nk::mean_over_time(hidden);
    auto dec_state = zero_state(tape, n, h);
    auto dec_hidden = run_lstm(nk::lstm_params(tape, store, "dec"), nk::repeat_time(latent, w), dec_state);
    auto out = nk::linear(tape, store, "out", nk::reshape(nk::stack_time(dec_hidden), {n * w, h}));
    return nk::reshape(out, {n, w, d_});
  }
};

/// Stacked LSTM whose last hidden state feeds a linear head predicting the
/// next k steps. Errors are scored by a Gaussian fitted on validation data.
class LstmP final : public Architecture {
 public:
  using Architecture::Architecture;

  std::size_t horizon() const override { return spec_.horizon; }
  bool calibrated() const override { return true; }

  void declare(nk::ParamStore& store) const override {
    for (std::size_t l = 0; l < spec_.layers; ++l) {
      nk::declare_lstm(store, layer_name(l), l == 0 ? d_ : spec_.hidden_size, spec_.hidden_size);
    }
    nk::declare_linear(store, "head", spec_.hidden_size, spec_.horizon * d_);
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    return nk::loss(predict(tape, store, batch), tape.constant(batch.future), nk::LossKind::MSE);
  }

  std::vector<double> calibration_errors(nk::ParamStore& store, const Batch& batch) const override {
    nk::Tape tape(false);
    const auto& pred = predict(tape, store, batch).value().values();
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = batch.future.values()[i] - pred[i];
    return out;
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>& calibration,
                                                   nk::Rng&) const override {
    const auto err = calibration_errors(store, batch);
    const std::size_t k = spec_.horizon;
    std::vector<scoring::OverlapScore> out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      scoring::OverlapScore s{batch.starts[i] + input_steps(), {}};
      for (std::size_t j = 0; j < k; ++j) {
        s.values.push_back(scoring::nll(*calibration, std::span<const double>(err).subspan((i * k + j) * d_, d_)));
      }
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  static std::string layer_name(std::size_t l) { return "lstm" + std::to_string(l); }

  nk::Var predict(nk::Tape& tape, nk::ParamStore& store, const Batch& batch) const {
    const std::size_t n = batch.size();
    auto seq = tape.constant(batch.input);
    nk::LstmState state;
    for (std::size_t l = 0; l < spec_.layers; ++l) {
      state = zero_state(tape, n, spec_.hidden_size);
      auto hidden = run_lstm(nk::lstm_params(tape, store, layer_name(l)), seq, state);
      if (l + 1 < spec_.layers) seq = nk::stack_time(hidden);
    }
    return nk::reshape(nk::linear(tape, store, "head", state.h), {n, spec_.horizon, d_});
  }
};

/// Sequential VAE with LSTM encoder and decoder and a per-step Gaussian
/// posterior. The prior mean at each step comes either from a prior LSTM
/// run over the previous latent sample (LstmVAE) or from the linear
/// interpolation between learnable endpoints v1 and vT (LstmDVAE); prior
/// variance is the identity.
class LstmVaeBase : public Architecture {
 public:
  using Architecture::Architecture;

  void declare(nk::ParamStore& store) const override {
    const std::size_t h = spec_.hidden_size, z = spec_.latent_dim;
    nk::declare_lstm(store, "enc", d_, h);
    nk::declare_linear(store, "enc/mean", h, z);
    nk::declare_linear(store, "enc/log_var", h, z);
    nk::declare_lstm(store, "dec", z, h);
    nk::declare_linear(store, "dec/mean", h, d_);
    nk::declare_linear(store, "dec/log_var", h, d_);
    declare_prior(store);
  }

 protected:
  struct Posterior {
    nk::Var mean;     // [n*w, Z]
    nk::Var log_var;  // [n*w, Z]
  };

  virtual void declare_prior(nk::ParamStore& store) const = 0;
  /// Prior means [n*w, Z] given the latent sequence [n, w, Z].
  virtual nk::Var prior_mean(nk::Tape& tape, nk::ParamStore& store, nk::Var z_seq) const = 0;

  Posterior encode(nk::Tape& tape, nk::ParamStore& store, nk::Var x) const {
    const std::size_t n = x.dim(0), w = x.dim(1), h = spec_.hidden_size;
    auto state = zero_state(tape, n, h);
    auto hidden = nk::reshape(nk::stack_time(run_lstm(nk::lstm_params(tape, store, "enc"), x, state)), {n * w, h});
    return {nk::linear(tape, store, "enc/mean", hidden),
            nk::soft_clamp(nk::linear(tape, store, "enc/log_var", hidden), kLogVarBound)};
  }

  /// Reconstruction Gaussian [n*w, D] for a latent sequence [n, w, Z].
  std::pair<nk::Var, nk::Var> decode(nk::Tape& tape, nk::ParamStore& store, nk::Var z_seq) const {
    const std::size_t n = z_seq.dim(0), w = z_seq.dim(1), h = spec_.hidden_size;
    auto state = zero_state(tape, n, h);
    auto hidden = nk::reshape(nk::stack_time(run_lstm(nk::lstm_params(tape, store, "dec"), z_seq, state)), {n * w, h});
    return {nk::linear(tape, store, "dec/mean", hidden),
            nk::soft_clamp(nk::linear(tape, store, "dec/log_var", hidden), kLogVarBound)};
  }

  /// Summed negative ELBO of the batch with z drawn by `sample`.
  nk::Var negative_elbo(nk::Tape& tape, nk::ParamStore& store, nk::Var encoder_input, nk::Var target,
                        nk::Rng* sample) const {
    const std::size_t n = target.dim(0), w = target.dim(1);
    const auto q = encode(tape, store, encoder_input);
    auto z = sample ? reparameterize(tape, q.mean, q.log_var, *sample) : q.mean;
    auto z_seq = nk::reshape(z, {n, w, spec_.latent_dim});
    auto [x_mean, x_log_var] = decode(tape, store, z_seq);
    auto x = nk::reshape(target, {n * w, d_});
    auto rec = nk::gaussian_nll(x, x_mean, x_log_var);
    auto zeros = tape.constant(nk::Tensor(q.mean.shape()));
    auto kl = nk::kl_diag_gaussian(q.mean, q.log_var, prior_mean(tape, store, z_seq), zeros);
    return nk::add(nk::sum(rec), nk::sum(kl));
  }

  /// Per-window negative ELBO from an [n*w, *] element-wise term pair.
  std::vector<double> per_window(const nk::Tensor& rec, const nk::Tensor& kl, std::size_t n) const {
    std::vector<double> out(n, 0.0);
    const std::size_t rc = rec.size() / n, kc = kl.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < rc; ++j) out[i] += rec.values()[i * rc + j];
      for (std::size_t j = 0; j < kc; ++j) out[i] += kl.values()[i * kc + j];
      out[i] /= static_cast<double>(input_steps() * d_);
    }
    return out;
  }
};

class LstmVae final : public LstmVaeBase {
 public:
  using LstmVaeBase::LstmVaeBase;

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng& rng) const override {
    auto x = tape.constant(batch.input);
    return nk::scale(negative_elbo(tape, store, x, x, &rng), 1.0 / static_cast<double>(batch.input.size()));
  }

  /// Negative ELBO with the latent path evaluated at the posterior mean.
  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng&) const override {
    nk::Tape tape(false);
    const std::size_t n = batch.size(), w = input_steps();
    auto x = tape.constant(batch.input);
    const auto q = encode(tape, store, x);
    auto z_seq = nk::reshape(q.mean, {n, w, spec_.latent_dim});
    auto [x_mean, x_log_var] = decode(tape, store, z_seq);
    auto rec = nk::gaussian_nll(nk::reshape(x, {n * w, d_}), x_mean, x_log_var);
    auto zeros = tape.constant(nk::Tensor(q.mean.shape()));
    auto kl = nk::kl_diag_gaussian(q.mean, q.log_var, prior_mean(tape, store, z_seq), zeros);
    return at_last_step(batch, w, per_window(rec.value(), kl.value(), n));
  }

 protected:
  void declare_prior(nk::ParamStore& store) const override {
    nk::declare_lstm(store, "prior", spec_.latent_dim, spec_.hidden_size);
    nk::declare_linear(store, "prior/mean", spec_.hidden_size, spec_.latent_dim);
  }

  nk::Var prior_mean(nk::Tape& tape, nk::ParamStore& store, nk::Var z_seq) const override {
    const std::size_t n = z_seq.dim(0), w = z_seq.dim(1), h = spec_.hidden_size;
    std::vector<nk::Var> inputs{tape.constant(nk::Tensor({n, spec_.latent_dim}))};
    for (std::size_t t = 0; t + 1 < w; ++t) inputs.push_back(nk::time_step(z_seq, t));
    auto state = zero_state(tape, n, h);
    auto hidden = nk::reshape(nk::stack_time(run_lstm(nk::lstm_params(tape, store, "prior"), inputs, state)), {n * w, h});
    return nk::linear(tape, store, "prior/mean", hidden);
  }
};

class LstmDvae final : public LstmVaeBase {
 public:
  using LstmVaeBase::LstmVaeBase;

  /// Denoising objective: the encoder sees x plus N(0, noise_std^2) noise,
  /// the likelihood is evaluated on the clean x.
  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng& rng) const override {
    nk::Tensor noisy = batch.input;
    for (double& v : noisy.values()) v += rng.normal(0.0, spec_.noise_std);
    auto l = negative_elbo(tape, store, tape.constant(std::move(noisy)), tape.constant(batch.input), &rng);
    return nk::scale(l, 1.0 / static_cast<double>(batch.input.size()));
  }

  /// Negative reconstruction probability: mean over L posterior samples of
  /// -log p(x | z), per window cell.
  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng& rng) const override {
    const std::size_t n = batch.size(), w = input_steps(), zd = spec_.latent_dim, samples = spec_.mc_samples;
    nk::Tape tape(false);
    const auto q = encode(tape, store, tape.constant(batch.input));
    nk::Tensor z({samples * n, w, zd});
    const auto& m = q.mean.value().values();
    const auto& lv = q.log_var.value().values();
    for (std::size_t l = 0; l < samples; ++l) {
      for (std::size_t i = 0; i < m.size(); ++i) z.values()[l * m.size() + i] = m[i] + std::exp(0.5 * lv[i]) * rng.normal();
    }
    auto [x_mean, x_log_var] = decode(tape, store, tape.constant(std::move(z)));
    const auto& xm = x_mean.value().values();
    const auto& xl = x_log_var.value().values();
    const std::size_t cells = w * d_;
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    std::vector<double> s(n, 0.0);
    for (std::size_t l = 0; l < samples; ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < cells; ++c) {
          const std::size_t k = (l * n + i) * cells + c;
          const double e = batch.input.values()[i * cells + c] - xm[k];
          s[i] += 0.5 * (log_2pi + xl[k] + e * e * std::exp(-xl[k]));
        }
      }
    }
    for (double& v : s) v /= static_cast<double>(samples * cells);
    return at_last_step(batch, w, s);
  }

 protected:
  void declare_prior(nk::ParamStore& store) const override {
    store.add("prior/v1", {spec_.latent_dim}, nk::Init::zeros());
    store.add("prior/vT", {spec_.latent_dim}, nk::Init::zeros());
  }

  nk::Var prior_mean(nk::Tape& tape, nk::ParamStore& store, nk::Var z_seq) const override {
    const std::size_t n = z_seq.dim(0), w = z_seq.dim(1), zd = spec_.latent_dim;
    auto v1 = tape.param(store, "prior/v1");
    auto vt = tape.param(store, "prior/vT");
    auto zeros = tape.constant(nk::Tensor({n, zd}));
    const double last = w > 1 ? static_cast<double>(w - 1) : 1.0;
    std::vector<nk::Var> steps;
    for (std::size_t t = 0; t < w; ++t) {
      const double r = static_cast<double>(t) / last;
      steps.push_back(nk::add_bias(zeros, nk::add(nk::scale(v1, 1.0 - r), nk::scale(vt, r))));
    }
    return nk::reshape(nk::stack_time(steps), {n * w, zd});
  }
};

}  // namespace

std::unique_ptr<Architecture> make_lstm_ae(const DetectorSpec& spec, std::size_t d, bool trained) {
  return std::make_unique<LstmAE>(spec, d, trained);
}
std::unique_ptr<Architecture> make_lstm_max_ae(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<LstmMaxAE>(spec, d);
}
std::unique_ptr<Architecture> make_lstm_p(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<LstmP>(spec, d);
}
std::unique_ptr<Architecture> make_lstm_vae(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<LstmVae>(spec, d);
}
std::unique_ptr<Architecture> make_lstm_dvae(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<LstmDvae>(spec, d);
}

}  // namespace tsad::detectors::internal
