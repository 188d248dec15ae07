#include "architecture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsad/errors.hpp"

namespace tsad::detectors::internal {

namespace {

constexpr std::size_t kScoreChunk = 256;

}  // namespace

nk::Tensor time_slice(const nk::Tensor& seq, std::size_t begin, std::size_t count) {
  const std::size_t n = seq.dim(0), steps = seq.dim(1), c = seq.dim(2);
  if (begin + count > steps) throw DimensionError("time_slice beyond sequence end");
  nk::Tensor out({n, count, c});
  for (std::size_t b = 0; b < n; ++b) {
    const double* src = seq.values().data() + (b * steps + begin) * c;
    std::copy(src, src + count * c, out.values().data() + b * count * c);
  }
  return out;
}

Batch make_batch(const std::vector<dataio::Window>& windows, const std::vector<std::size_t>& indices,
                 std::size_t input_steps) {
  const auto& first = windows.at(indices.front());
  const std::size_t rows = first.steps, d = first.features, n = indices.size();
  Batch batch{nk::Tensor(), nk::Tensor(), nk::Tensor({n, rows, d}), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = windows[indices[i]];
    std::copy(w.values.begin(), w.values.end(), batch.full.values().begin() + static_cast<std::ptrdiff_t>(i * rows * d));
    batch.starts.push_back(w.start);
  }
  batch.input = time_slice(batch.full, 0, input_steps);
  if (rows > input_steps) batch.future = time_slice(batch.full, input_steps, rows - input_steps);
  return batch;
}

nk::Var flatten(nk::Var seq) { return nk::reshape(seq, {seq.dim(0), seq.dim(1) * seq.dim(2)}); }

nk::Var unflatten(nk::Var x, std::size_t steps, std::size_t channels) {
  return nk::reshape(x, {x.dim(0), steps, channels});
}

std::vector<double> window_mse(const nk::Tensor& a, const nk::Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("window_mse: " + nk::shape_string(a.shape()) + " vs " + nk::shape_string(b.shape()));
  const std::size_t n = a.dim(0), cells = a.size() / n;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      const double e = a.values()[i * cells + j] - b.values()[i * cells + j];
      acc += e * e;
    }
    out[i] = acc / static_cast<double>(cells);
  }
  return out;
}

std::vector<scoring::OverlapScore> at_last_step(const Batch& batch, std::size_t input_steps,
                                                const std::vector<double>& values) {
  std::vector<scoring::OverlapScore> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back({batch.starts[i] + input_steps - 1, {values[i]}});
  return out;
}

nk::LstmState zero_state(nk::Tape& tape, std::size_t n, std::size_t hidden) {
  return {tape.constant(nk::Tensor({n, hidden})), tape.constant(nk::Tensor({n, hidden}))};
}

std::vector<nk::Var> run_lstm(const nk::LstmParams& params, const std::vector<nk::Var>& inputs, nk::LstmState& state) {
  std::vector<nk::Var> hidden;
  hidden.reserve(inputs.size());
  for (const auto& x : inputs) {
    state = nk::lstm_cell_step(x, state, params);
    hidden.push_back(state.h);
  }
  return hidden;
}

std::vector<nk::Var> run_lstm(const nk::LstmParams& params, nk::Var seq, nk::LstmState& state) {
  std::vector<nk::Var> inputs;
  for (std::size_t t = 0; t < seq.dim(1); ++t) inputs.push_back(nk::time_step(seq, t));
  return run_lstm(params, inputs, state);
}

nk::Tensor standard_normal(const nk::Shape& shape, nk::Rng& rng) {
  nk::Tensor eps(shape);
  for (double& v : eps.values()) v = rng.normal();
  return eps;
}

nk::Var reparameterize(nk::Tape& tape, nk::Var mean, nk::Var log_var, nk::Rng& rng) {
  auto eps = tape.constant(standard_normal(mean.shape(), rng));
  return nk::add(mean, nk::mul(nk::exp(nk::scale(log_var, 0.5)), eps));
}

nk::OptimConfig Architecture::optim_config() const { return optim_config_with(spec_.learning_rate); }

nk::OptimConfig Architecture::optim_config_with(double learning_rate) const {
  nk::OptimConfig c;
  c.kind = nk::OptimizerKind::Adam;
  c.learning_rate = learning_rate;
  return c;
}

std::vector<nk::Optimizer> Architecture::make_optimizers(const nk::ParamStore& store) const {
  std::vector<nk::Optimizer> out;
  out.emplace_back(optim_config(), store);
  return out;
}

double Architecture::apply(nk::Tape& tape, nk::Var loss, nk::ParamStore& store, nk::Optimizer& opt) const {
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  tape.backward(loss);
  nk::clip_grad_norm(store, opt.names(), spec_.grad_clip);
  opt.step(store);
  return value;
}

double Architecture::train_step(TrainContext& ctx, const Batch& batch) const {
  nk::Tape tape;
  auto l = loss(tape, ctx.store, batch, ctx.rng);
  return apply(tape, l, ctx.store, ctx.optimizers.front());
}

nk::Var Architecture::loss(nk::Tape&, nk::ParamStore&, const Batch&, nk::Rng&) const {
  throw ContractError(display_name(spec_.variant) + " has no single training objective");
}

std::vector<double> Architecture::calibration_errors(nk::ParamStore&, const Batch&) const {
  throw ContractError(display_name(spec_.variant) + " is not calibrated");
}

std::vector<scoring::OverlapScore> Architecture::window_scores(nk::ParamStore&, const Batch&,
                                                               const std::optional<scoring::GaussianModel>&,
                                                               nk::Rng&) const {
  throw ContractError(display_name(spec_.variant) + " does not score windows individually");
}

ScoreSeries Architecture::score_series(nk::ParamStore& store, const dataio::SeriesMatrix& normalized,
                                       const std::optional<scoring::GaussianModel>& calibration, nk::Rng& rng) const {
  const std::size_t rows = input_steps() + horizon();
  if (normalized.steps() < rows) {
    throw ContractError("series of " + std::to_string(normalized.steps()) + " steps is shorter than one window (" +
                        std::to_string(rows) + ")");
  }
  const auto windows = dataio::make_windows(normalized, {rows, 1});
  std::vector<scoring::OverlapScore> all;
  for (std::size_t begin = 0; begin < windows.size(); begin += kScoreChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(windows.size(), begin + kScoreChunk); ++i) idx.push_back(i);
    auto part = window_scores(store, make_batch(windows, idx, input_steps()), calibration, rng);
    std::move(part.begin(), part.end(), std::back_inserter(all));
  }
  const auto counts = scoring::coverage_counts(all, normalized.steps());
  ScoreSeries out{scoring::aggregate_overlaps(all, normalized.steps()), 0};
  while (out.warmup < counts.size() && counts[out.warmup] == 0) ++out.warmup;
  return out;
}

std::unique_ptr<Architecture> make_architecture(const DetectorSpec& spec, std::size_t features) {
  switch (spec.variant) {
    case Variant::DenseAE: return make_dense_ae(spec, features);
    case Variant::LstmAE: return make_lstm_ae(spec, features, true);
    case Variant::LstmMaxAE: return make_lstm_max_ae(spec, features);
    case Variant::UntrainedLstmAE: return make_lstm_ae(spec, features, false);
    case Variant::USAD: return make_usad(spec, features);
    case Variant::TcnS2SAE: return make_tcn_s2s_ae(spec, features);
    case Variant::LstmP: return make_lstm_p(spec, features);
    case Variant::TcnP: return make_tcn_p(spec, features);
    case Variant::TcnS2SP: return make_tcn_s2s_p(spec, features);
    case Variant::LstmVAE: return make_lstm_vae(spec, features);
    case Variant::DonutMV: return make_donut(spec, features);
    case Variant::LstmDVAE: return make_lstm_dvae(spec, features);
    case Variant::BeatGAN: return make_beatgan(spec, features);
  }
  throw ConfigError("unknown detector variant");
}

}  // namespace tsad::detectors::internal
