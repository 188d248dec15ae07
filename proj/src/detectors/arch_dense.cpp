#include <cmath>
#include <numbers>

#include "architecture.hpp"
#include "tsad/errors.hpp"

namespace tsad::detectors::internal {

namespace {

/// Fully connected autoencoder pieces on the flattened window.
class DenseBase : public Architecture {
 public:
  using Architecture::Architecture;

 protected:
  std::size_t cells() const { return input_steps() * d_; }

  void declare_encoder(nk::ParamStore& store, const std::string& prefix, std::size_t out) const {
    nk::declare_linear(store, prefix + "/l1", cells(), spec_.hidden_size);
    nk::declare_linear(store, prefix + "/l2", spec_.hidden_size, out);
  }
  void declare_decoder(nk::ParamStore& store, const std::string& prefix, std::size_t out) const {
    nk::declare_linear(store, prefix + "/l1", spec_.latent_dim, spec_.hidden_size);
    nk::declare_linear(store, prefix + "/l2", spec_.hidden_size, out);
  }
  static nk::Var mlp(nk::Tape& tape, nk::ParamStore& store, const std::string& prefix, nk::Var x) {
    return nk::linear(tape, store, prefix + "/l2", nk::relu(nk::linear(tape, store, prefix + "/l1", x)));
  }
};

class DenseAE final : public DenseBase {
 public:
  using DenseBase::DenseBase;

  void declare(nk::ParamStore& store) const override {
    declare_encoder(store, "enc", spec_.latent_dim);
    declare_decoder(store, "dec", cells());
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng&) const override {
    auto x = flatten(tape.constant(batch.input));
    return nk::loss(reconstruct(tape, store, x), x, nk::LossKind::MSE);
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng&) const override {
    nk::Tape tape(false);
    auto x = flatten(tape.constant(batch.input));
    return at_last_step(batch, input_steps(), window_mse(reconstruct(tape, store, x).value(), x.value()));
  }

 private:
  static nk::Var reconstruct(nk::Tape& tape, nk::ParamStore& store, nk::Var x) {
    return mlp(tape, store, "dec", mlp(tape, store, "enc", x));
  }
};

/// Shared encoder, two decoders. Decoder outputs are softly bounded so the
/// adversarial phase cannot push reconstructions to infinity.
class Usad final : public DenseBase {
 public:
  using DenseBase::DenseBase;

  void declare(nk::ParamStore& store) const override {
    declare_encoder(store, "enc", spec_.latent_dim);
    declare_decoder(store, "dec1", cells());
    declare_decoder(store, "dec2", cells());
  }

  std::vector<nk::Optimizer> make_optimizers(const nk::ParamStore& store) const override {
    auto enc = store.names_with_prefix("enc/");
    auto first = enc, second = enc;
    for (const auto& n : store.names_with_prefix("dec1/")) first.push_back(n);
    for (const auto& n : store.names_with_prefix("dec2/")) second.push_back(n);
    std::vector<nk::Optimizer> out;
    out.emplace_back(optim_config(), store, first);
    out.emplace_back(optim_config(), store, second);
    return out;
  }

  double train_step(TrainContext& ctx, const Batch& batch) const override {
    const double n = static_cast<double>(ctx.epoch);
    double recorded;
    {
      nk::Tape tape;
      auto x = flatten(tape.constant(batch.input));
      auto w1 = ae(tape, ctx.store, "dec1", x);
      auto w3 = ae(tape, ctx.store, "dec2", w1);
      auto l1 = nk::add(nk::scale(nk::loss(w1, x, nk::LossKind::MSE), 1.0 / n),
                        nk::scale(nk::loss(w3, x, nk::LossKind::MSE), 1.0 - 1.0 / n));
      recorded = apply(tape, l1, ctx.store, ctx.optimizers[0]);
      if (!std::isfinite(recorded)) return recorded;
    }
    nk::Tape tape;
    auto x = flatten(tape.constant(batch.input));
    auto w2 = ae(tape, ctx.store, "dec2", x);
    auto w3 = ae(tape, ctx.store, "dec2", ae(tape, ctx.store, "dec1", x));
    auto l2 = nk::sub(nk::scale(nk::loss(w2, x, nk::LossKind::MSE), 1.0 / n),
                      nk::scale(nk::loss(w3, x, nk::LossKind::MSE), 1.0 - 1.0 / n));
    const double second = apply(tape, l2, ctx.store, ctx.optimizers[1]);
    return std::isfinite(second) ? recorded : second;
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng&) const override {
    nk::Tape tape(false);
    auto x = flatten(tape.constant(batch.input));
    auto w1 = ae(tape, store, "dec1", x);
    auto w3 = ae(tape, store, "dec2", w1);
    const auto e1 = window_mse(w1.value(), x.value());
    const auto e3 = window_mse(w3.value(), x.value());
    std::vector<double> s(e1.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = spec_.alpha * e1[i] + spec_.beta * e3[i];
    return at_last_step(batch, input_steps(), s);
  }

 private:
  static constexpr double kOutputBound = 10.0;

  static nk::Var ae(nk::Tape& tape, nk::ParamStore& store, const std::string& decoder, nk::Var x) {
    return nk::soft_clamp(mlp(tape, store, decoder, mlp(tape, store, "enc", x)), kOutputBound);
  }
};

/// Multivariate Donut: MLP VAE on the flattened window with random cell
/// masking; masked cells are left out of the reconstruction term.
class Donut final : public DenseBase {
 public:
  using DenseBase::DenseBase;

  void declare(nk::ParamStore& store) const override {
    nk::declare_linear(store, "enc/l1", cells(), spec_.hidden_size);
    nk::declare_linear(store, "enc/l2", spec_.hidden_size, spec_.hidden_size);
    nk::declare_linear(store, "enc/mean", spec_.hidden_size, spec_.latent_dim);
    nk::declare_linear(store, "enc/log_var", spec_.hidden_size, spec_.latent_dim);
    nk::declare_linear(store, "dec/l1", spec_.latent_dim, spec_.hidden_size);
    nk::declare_linear(store, "dec/l2", spec_.hidden_size, spec_.hidden_size);
    nk::declare_linear(store, "dec/mean", spec_.hidden_size, cells());
    nk::declare_linear(store, "dec/log_var", spec_.hidden_size, cells());
  }

  nk::Var loss(nk::Tape& tape, nk::ParamStore& store, const Batch& batch, nk::Rng& rng) const override {
    const std::size_t n = batch.size();
    nk::Tensor keep({n, cells()}, 1.0), masked_input({n, cells()});
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (spec_.mask_rate > 0.0 && rng.bernoulli(spec_.mask_rate)) keep.values()[i] = 0.0;
      masked_input.values()[i] = batch.input.values()[i] * keep.values()[i];
    }
    auto x = tape.constant(batch.input.reshaped({n, cells()}));
    auto [mean, log_var] = encode(tape, store, tape.constant(std::move(masked_input)));
    auto z = reparameterize(tape, mean, log_var, rng);
    auto [x_mean, x_log_var] = decode(tape, store, z);
    auto rec = nk::sum(nk::mul(nk::gaussian_nll(x, x_mean, x_log_var), tape.constant(std::move(keep))));
    auto zeros = tape.constant(nk::Tensor(mean.shape()));
    auto kl = nk::sum(nk::kl_diag_gaussian(mean, log_var, zeros, zeros));
    return nk::scale(nk::add(rec, kl), 1.0 / static_cast<double>(n * cells()));
  }

  std::vector<scoring::OverlapScore> window_scores(nk::ParamStore& store, const Batch& batch,
                                                   const std::optional<scoring::GaussianModel>&,
                                                   nk::Rng& rng) const override {
    const std::size_t n = batch.size(), samples = spec_.mc_samples, latent = spec_.latent_dim;
    nk::Tape tape(false);
    auto [mean, log_var] = encode(tape, store, tape.constant(batch.input.reshaped({n, cells()})));
    // Decode all L posterior samples of all windows in one pass.
    nk::Tensor z({samples * n, latent});
    for (std::size_t l = 0; l < samples; ++l) {
      for (std::size_t i = 0; i < n * latent; ++i) {
        const double mu = mean.value().values()[i];
        const double log_v = log_var.value().values()[i];
        z.values()[l * n * latent + i] = mu + std::exp(0.5 * log_v) * rng.normal();
      }
    }
    auto [x_mean, x_log_var] = decode(tape, store, tape.constant(std::move(z)));
    std::vector<double> s(n, 0.0);
    const auto& xm = x_mean.value().values();
    const auto& xl = x_log_var.value().values();
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t l = 0; l < samples; ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        double nll = 0.0;
        for (std::size_t c = 0; c < cells(); ++c) {
          const std::size_t k = (l * n + i) * cells() + c;
          const double e = batch.input.values()[i * cells() + c] - xm[k];
          nll += 0.5 * (log_2pi + xl[k] + e * e * std::exp(-xl[k]));
        }
        s[i] += nll;
      }
    }
    for (double& v : s) v /= static_cast<double>(samples * cells());
    return at_last_step(batch, input_steps(), s);
  }

 private:
  static std::pair<nk::Var, nk::Var> encode(nk::Tape& tape, nk::ParamStore& store, nk::Var x) {
    auto h = nk::relu(nk::linear(tape, store, "enc/l2", nk::relu(nk::linear(tape, store, "enc/l1", x))));
    return {nk::linear(tape, store, "enc/mean", h),
            nk::soft_clamp(nk::linear(tape, store, "enc/log_var", h), kLogVarBound)};
  }
  static std::pair<nk::Var, nk::Var> decode(nk::Tape& tape, nk::ParamStore& store, nk::Var z) {
    auto h = nk::relu(nk::linear(tape, store, "dec/l2", nk::relu(nk::linear(tape, store, "dec/l1", z))));
    return {nk::linear(tape, store, "dec/mean", h),
            nk::soft_clamp(nk::linear(tape, store, "dec/log_var", h), kLogVarBound)};
  }
};

}  // namespace

std::unique_ptr<Architecture> make_dense_ae(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<DenseAE>(spec, d);
}
std::unique_ptr<Architecture> make_usad(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<Usad>(spec, d);
}
std::unique_ptr<Architecture> make_donut(const DetectorSpec& spec, std::size_t d) {
  return std::make_unique<Donut>(spec, d);
}

}  // namespace tsad::detectors::internal
