#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tsad/dataio/synth.hpp"
#include "tsad/detectors/detector.hpp"
#include "tsad/errors.hpp"
#include "tsad/numkit/loss.hpp"

namespace det = tsad::detectors;
namespace dio = tsad::dataio;
namespace nk = tsad::numkit;

namespace {

dio::DatasetSplit small_split(std::size_t steps = 120, std::size_t features = 4, std::uint64_t seed = 3) {
  dio::SynthConfig cfg;
  cfg.runs = 4;
  cfg.steps = steps;
  cfg.features = features;
  cfg.seed = seed;
  return dio::make_split(dio::synth_generate(cfg), {});
}

dio::SeriesMatrix faulty_run(std::size_t steps, std::size_t features, std::uint64_t seed) {
  dio::SynthConfig cfg;
  cfg.runs = 1;
  cfg.steps = steps;
  cfg.features = features;
  cfg.seed = seed;
  cfg.first_run_id = 50;
  cfg.fault_kind = dio::FaultKind::Step;
  cfg.fault_onset = steps / 2;
  return dio::synth_generate(cfg)[0].series;
}

det::DetectorSpec quick_spec(det::Variant v, std::size_t epochs = 2) {
  auto spec = det::default_spec(v);
  spec.window = {16, 4};
  spec.hidden_size = 8;
  spec.latent_dim = 4;
  spec.epochs = epochs;
  spec.mc_samples = 4;
  spec.seed = 5;
  return spec;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

double relu(double x) { return x > 0 ? x : 0; }

// Plain-loop dense layer: y = x W + b.
std::vector<double> dense(const std::vector<double>& x, const nk::Tensor& w, const nk::Tensor& b) {
  const std::size_t in = w.dim(0), out = w.dim(1);
  std::vector<double> y(out);
  for (std::size_t j = 0; j < out; ++j) {
    double acc = b.values()[j];
    for (std::size_t i = 0; i < in; ++i) acc += x[i] * w.values()[i * out + j];
    y[j] = acc;
  }
  return y;
}

std::vector<double> mlp(const std::vector<double>& x, const nk::ParamStore& p, const std::string& prefix) {
  auto h = dense(x, p.get(prefix + "/l1/W"), p.get(prefix + "/l1/b"));
  for (double& v : h) v = relu(v);
  return dense(h, p.get(prefix + "/l2/W"), p.get(prefix + "/l2/b"));
}

}  // namespace

TEST(Registry, NamesRoundTripAndUnknownFails) {
  EXPECT_EQ(det::all_variants().size(), 13u);
  for (auto v : det::all_variants()) {
    EXPECT_EQ(det::parse_variant(det::variant_id(v)), v);
    EXPECT_EQ(det::parse_variant(det::display_name(v)), v);
  }
  EXPECT_THROW(det::parse_variant("omnianomaly"), tsad::ConfigError);
  EXPECT_EQ(det::family_of(det::Variant::BeatGAN), det::Family::GenerativeGan);
  EXPECT_EQ(det::default_spec(det::Variant::LstmP).layers, 2u);
}

TEST(Spec, RejectsBadHyperparameters) {
  auto spec = quick_spec(det::Variant::LstmP);
  spec.horizon = 0;
  EXPECT_THROW(det::validate_spec(spec), tsad::ConfigError);
  auto dense = quick_spec(det::Variant::DenseAE);
  dense.latent_dim = 16 * 4;
  EXPECT_THROW(det::fit(dense, small_split()), tsad::ConfigError);
  auto tcn = quick_spec(det::Variant::TcnS2SAE);
  tcn.window.width = 18;
  EXPECT_THROW(det::fit(tcn, small_split()), tsad::ConfigError);
}

TEST(Fit, ContractErrors) {
  dio::DatasetSplit empty;
  EXPECT_THROW(det::fit(quick_spec(det::Variant::DenseAE), empty), tsad::ContractError);
  auto no_val = small_split();
  no_val.validation.clear();
  EXPECT_THROW(det::fit(quick_spec(det::Variant::LstmP), no_val), tsad::ContractError);
  const auto model = det::fit(quick_spec(det::Variant::DenseAE, 1), small_split());
  EXPECT_THROW(det::score(model, faulty_run(60, 5, 1)), tsad::ContractError);
}

TEST(Fit, DivergenceReportsEpoch) {
  auto spec = quick_spec(det::Variant::DenseAE, 5);
  spec.learning_rate = 1e300;
  spec.grad_clip = 1e300;
  try {
    det::fit(spec, small_split());
    FAIL() << "expected TrainingError";
  } catch (const tsad::TrainingError& e) {
    EXPECT_GE(e.epoch(), 1u);
    EXPECT_LE(e.epoch(), 5u);
  }
}

TEST(Fit, UntrainedKeepsInitialization) {
  const auto spec = quick_spec(det::Variant::UntrainedLstmAE, 10);
  const auto split = small_split();
  const auto model = det::fit(spec, split);
  EXPECT_EQ(model.optimizer_steps, 0u);
  EXPECT_TRUE(model.loss_history.empty());
  EXPECT_TRUE(model.params.same_values(det::initial_params(spec, 4)));
  const auto run = faulty_run(80, 4, 3);
  EXPECT_EQ(det::score(model, run).scores, det::score(model, run).scores);
}

TEST(Fit, DenseAeLearnsConstantZeroData) {
  std::vector<dio::RunRecord> runs;
  for (std::uint32_t i = 0; i < 4; ++i) runs.push_back({i, 0, dio::SeriesMatrix(120, 3, std::vector<double>(360, 0.0))});
  auto spec = quick_spec(det::Variant::DenseAE, 50);
  spec.learning_rate = 1e-2;
  const auto model = det::fit(spec, dio::make_split(runs, {}));
  EXPECT_LT(model.loss_history.back(), 1e-4);
}

TEST(Fit, SameSeedSameParameters) {
  const auto split = small_split();
  for (auto v : {det::Variant::DenseAE, det::Variant::LstmAE, det::Variant::LstmDVAE, det::Variant::BeatGAN,
                 det::Variant::USAD, det::Variant::DonutMV}) {
    const auto a = det::fit(quick_spec(v), split);
    const auto b = det::fit(quick_spec(v), split);
    EXPECT_TRUE(a.params.same_values(b.params)) << det::display_name(v);
    EXPECT_EQ(a.loss_history, b.loss_history);
  }
}

TEST(Score, LengthAndWarmupForEveryVariant) {
  const auto split = small_split(120, 4);
  const auto run = faulty_run(200, 4, 3);
  for (auto v : det::all_variants()) {
    auto spec = quick_spec(v, 1);
    spec.horizon = 3;
    const auto model = det::fit(spec, split);
    const auto s = det::score(model, run);
    ASSERT_EQ(s.scores.size(), 200u) << det::display_name(v);
    EXPECT_EQ(s.warmup, det::is_forecaster(v) ? 16u : 15u) << det::display_name(v);
    for (std::size_t t = 0; t < s.warmup; ++t) EXPECT_EQ(s.scores[t], s.scores[s.warmup]);
    for (double x : s.scores) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Score, FaultyRunScoresAboveTrainingData) {
  dio::SynthConfig cfg;
  cfg.runs = 4;
  cfg.steps = 200;
  cfg.features = 6;
  cfg.seed = 9;
  const auto split = dio::make_split(dio::synth_generate(cfg), {});
  auto spec = quick_spec(det::Variant::DenseAE, 20);
  const auto model = det::fit(spec, split);
  const auto normal = det::score(model, split.train[0].series).scores;
  auto fault = faulty_run(200, 6, 9);
  const auto faulty = det::score(model, fault).scores;
  EXPECT_LT(median(normal), median(std::vector<double>(faulty.begin() + 100, faulty.end())));
}

TEST(LstmAE, TargetIsInputReversed) {
  dio::Window w{7, 5, 2, {}};
  for (int i = 0; i < 10; ++i) w.values.push_back(i * 1.5 - 2);
  const auto r = det::lstm_ae_target(w);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t d = 0; d < 2; ++d) EXPECT_EQ(r.at(t, d), w.at(4 - t, d));
  }
  EXPECT_EQ(det::lstm_ae_target(r).values, w.values);
}

TEST(LstmDVAE, PriorMeanInterpolatesEndpoints) {
  const std::vector<double> v1{1.0, -2.0, 0.5}, vt{3.0, 4.0, -0.5};
  EXPECT_EQ(det::dvae_prior_mean(v1, vt, 0, 10), v1);
  EXPECT_EQ(det::dvae_prior_mean(v1, vt, 10, 10), vt);
  const auto mid = det::dvae_prior_mean(v1, vt, 5, 10);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(mid[i], (v1[i] + vt[i]) / 2);
}

TEST(Vae, KlVanishesWhenPosteriorEqualsPrior) {
  nk::Tape tape;
  nk::Rng rng(1, "test/kl");
  nk::Tensor m({4, 3}), lv({4, 3});
  for (double& v : m.values()) v = rng.normal();
  for (double& v : lv.values()) v = rng.uniform(-2, 2);
  auto mean = tape.constant(m), log_var = tape.constant(lv);
  for (double k : nk::kl_diag_gaussian(mean, log_var, mean, log_var).value().values()) EXPECT_NEAR(k, 0.0, 1e-14);
}

TEST(Usad, AlphaOneBetaZeroIsPlainAe1Error) {
  const auto split = small_split();
  auto spec = quick_spec(det::Variant::USAD, 3);
  spec.alpha = 1.0;
  spec.beta = 0.0;
  const auto model = det::fit(spec, split);
  const auto run = faulty_run(60, 4, 3);
  const auto s = det::score(model, run);
  const auto z = dio::apply_norm(run, model.norm);
  for (std::size_t end : {15u, 30u, 59u}) {
    std::vector<double> x;
    for (std::size_t t = end - 15; t <= end; ++t) {
      for (std::size_t d = 0; d < 4; ++d) x.push_back(z.at(t, d));
    }
    const auto rec = mlp(mlp(x, model.params, "enc"), model.params, "dec1");
    double mse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = x[i] - 10.0 * std::tanh(rec[i] / 10.0);
      mse += e * e;
    }
    EXPECT_NEAR(s.scores[end], mse / static_cast<double>(x.size()), 1e-9);
  }
}

TEST(Training, LossFallsOverFiveEpochBlocks) {
  dio::SynthConfig cfg;
  cfg.runs = 5;
  cfg.steps = 200;
  cfg.features = 4;
  cfg.seed = 12;
  const auto split = dio::make_split(dio::synth_generate(cfg), {});
  for (auto v : det::all_variants()) {
    if (v == det::Variant::UntrainedLstmAE) continue;
    auto spec = det::default_spec(v);
    spec.window = {16, 2};
    spec.hidden_size = 16;
    spec.epochs = 15;
    spec.seed = 2;
    const auto h = det::fit(spec, split).loss_history;
    ASSERT_EQ(h.size(), 15u);
    for (double l : h) EXPECT_TRUE(std::isfinite(l)) << det::display_name(v);
    if (v == det::Variant::USAD || v == det::Variant::BeatGAN) continue;
    std::vector<double> block(3, 0.0);
    for (std::size_t i = 0; i < 15; ++i) block[i / 5] += h[i] / 5.0;
    EXPECT_GE(block[0], block[1]) << det::display_name(v);
    EXPECT_GE(block[1], block[2]) << det::display_name(v);
  }
}

TEST(DenseAE, FeaturePermutationWithPermutedInitLeavesScoresUnchanged) {
  const std::size_t d = 4, w = 16;
  const std::vector<std::size_t> perm{2, 0, 3, 1};  // new feature j is old feature perm[j]
  auto split = small_split(120, d, 21);
  auto permute_series = [&](const dio::SeriesMatrix& s) {
    std::vector<double> v(s.values().size());
    for (std::size_t t = 0; t < s.steps(); ++t) {
      for (std::size_t j = 0; j < d; ++j) v[t * d + j] = s.at(t, perm[j]);
    }
    return dio::SeriesMatrix(s.steps(), d, std::move(v), s.dt_minutes(), s.labels());
  };
  auto permuted = split;
  for (auto* runs : {&permuted.train, &permuted.validation}) {
    for (auto& r : *runs) r.series = permute_series(r.series);
  }
  auto spec = quick_spec(det::Variant::DenseAE, 3);
  spec.window = {w, 4};
  const auto base_init = det::initial_params(spec, d);
  // Flattened cell t*d + j of the permuted window is cell t*d + perm[j] of the original.
  auto moved = base_init;
  auto& w1 = moved.get("enc/l1/W");
  auto& w4 = moved.get("dec/l2/W");
  auto& b4 = moved.get("dec/l2/b");
  const auto& ow1 = base_init.get("enc/l1/W");
  const auto& ow4 = base_init.get("dec/l2/W");
  const auto& ob4 = base_init.get("dec/l2/b");
  const std::size_t h = ow1.dim(1), hd = ow4.dim(0);
  for (std::size_t t = 0; t < w; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t dst = t * d + j, src = t * d + perm[j];
      for (std::size_t k = 0; k < h; ++k) w1.values()[dst * h + k] = ow1.values()[src * h + k];
      for (std::size_t k = 0; k < hd; ++k) w4.values()[k * w * d + dst] = ow4.values()[k * w * d + src];
      b4.values()[dst] = ob4.values()[src];
    }
  }
  const auto a = det::fit(spec, split);
  det::FitOptions options;
  options.initial_params = &moved;
  const auto b = det::fit(spec, permuted, options);
  const auto run = faulty_run(80, d, 21);
  const auto sa = det::score(a, run).scores;
  const auto sb = det::score(b, permute_series(run)).scores;
  for (std::size_t t = 0; t < sa.size(); ++t) EXPECT_NEAR(sa[t], sb[t], 1e-9 * (1 + std::abs(sa[t])));
}

TEST(Corruption, NoiseRaisesDenseAeScores) {
  dio::SynthConfig cfg;
  cfg.runs = 5;
  cfg.steps = 200;
  cfg.features = 4;
  cfg.seed = 31;
  auto runs = dio::synth_generate(cfg);
  const auto held_out = runs.back().series;
  runs.pop_back();
  const auto model = det::fit(quick_spec(det::Variant::DenseAE, 10), dio::make_split(runs, {}));
  double previous = -1;
  for (double level : {0.0, 1.0, 2.0}) {
    auto noisy = held_out;
    nk::Rng rng(4, "test/noise");
    for (std::size_t t = 0; t < noisy.steps(); ++t) {
      for (std::size_t j = 0; j < 4; ++j) noisy.at(t, j) += level * model.norm.std[j] * rng.normal();
    }
    const auto s = det::score(model, noisy).scores;
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    EXPECT_GT(mean, previous);
    previous = mean;
  }
}

TEST(Serialization, RoundTripPreservesScores) {
  const auto split = small_split();
  const auto run = faulty_run(60, 4, 3);
  for (auto v : {det::Variant::LstmP, det::Variant::TcnS2SAE, det::Variant::DonutMV, det::Variant::LstmMaxAE}) {
    auto spec = quick_spec(v);
    spec.pooling = det::Pooling::Mean;
    const auto model = det::fit(spec, split);
    std::stringstream buf;
    det::save_detector(buf, model);
    const auto back = det::load_detector(buf);
    EXPECT_TRUE(back.params.same_values(model.params));
    EXPECT_EQ(back.loss_history, model.loss_history);
    EXPECT_EQ(back.optimizer_steps, model.optimizer_steps);
    EXPECT_EQ(back.calibration.has_value(), model.calibration.has_value());
    EXPECT_EQ(back.spec.pooling, det::Pooling::Mean);
    EXPECT_EQ(det::score(back, run).scores, det::score(model, run).scores);
  }
}

TEST(Serialization, CorruptFileNamesLine) {
  const auto model = det::fit(quick_spec(det::Variant::DenseAE, 1), small_split());
  std::stringstream buf;
  det::save_detector(buf, model);
  std::string text = buf.str();
  const auto pos = text.find("hidden_size");
  text.replace(pos, 11, "hidden_sise");
  std::istringstream in(text);
  try {
    det::load_detector(in);
    FAIL() << "expected ParseError";
  } catch (const tsad::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
  std::istringstream garbage("hello\n");
  EXPECT_THROW(det::load_detector(garbage), tsad::ParseError);
}
