#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>
#include <sstream>

#include "tsad/dataio/csv.hpp"
#include "tsad/dataio/masking.hpp"
#include "tsad/dataio/norm.hpp"
#include "tsad/dataio/signature.hpp"
#include "tsad/dataio/synth.hpp"
#include "tsad/dataio/windows.hpp"
#include "tsad/errors.hpp"

namespace dio = tsad::dataio;
namespace nk = tsad::numkit;

namespace {

dio::SeriesMatrix random_series(std::size_t t, std::size_t d, std::uint64_t seed) {
  nk::Rng rng(seed, "test/series");
  std::vector<double> v(t * d);
  for (double& x : v) x = rng.normal(0.0, 2.0);
  return dio::SeriesMatrix(t, d, std::move(v));
}

std::string csv_of_runs(std::size_t runs, std::size_t steps, int fault, bool with_label) {
  std::ostringstream os;
  os << "fault_id,run_id,timestep" << (with_label ? ",label" : "") << ",x1,x2\n";
  for (std::size_t r = 0; r < runs; ++r) {
    for (std::size_t t = 0; t < steps; ++t) {
      os << fault << ',' << r + 1 << ',' << t;
      if (with_label) os << ',' << (fault != 0 && t >= steps / 2 ? 1 : 0);
      os << ',' << 0.5 * static_cast<double>(t) << ',' << -static_cast<double>(r) << '\n';
    }
  }
  return os.str();
}

}  // namespace

TEST(Series, ValidatesShapeAndLabels) {
  EXPECT_THROW(dio::SeriesMatrix(2, 2, {1, 2, 3}), tsad::DimensionError);
  EXPECT_THROW(dio::SeriesMatrix(1, 1, {std::nan("")}), tsad::NumericError);
  EXPECT_THROW(dio::SeriesMatrix(2, 1, {1, 2}, 3.0, dio::Labels{0}), tsad::DimensionError);
  EXPECT_THROW(dio::SeriesMatrix(2, 1, {1, 2}, 3.0, dio::Labels{0, 2}), tsad::DataError);
  dio::RunRecord bad{1, 0, dio::SeriesMatrix(2, 1, {1, 2}, 3.0, dio::Labels{0, 1})};
  EXPECT_THROW(dio::validate_run(bad), tsad::DataError);
}

TEST(Split, QuarterOfFaultFreeRunsBecomesValidation) {
  for (std::size_t n : {2u, 3u, 4u, 7u, 8u, 500u}) {
    std::vector<dio::RunRecord> runs;
    for (std::size_t i = 0; i < n; ++i) {
      runs.push_back({static_cast<std::uint32_t>(i), 0, dio::SeriesMatrix(1, 1, {0.0})});
    }
    const auto split = dio::make_split(runs, {});
    EXPECT_EQ(split.validation.size(), std::max<std::size_t>(1, n / 4));
    EXPECT_EQ(split.train.size() + split.validation.size(), n);
    std::set<std::uint32_t> ids;
    for (const auto& r : split.train) ids.insert(r.run_id);
    for (const auto& r : split.validation) EXPECT_EQ(ids.count(r.run_id), 0u);
  }
  EXPECT_THROW(dio::make_split({{0, 0, dio::SeriesMatrix(1, 1, {0.0})}}, {}), tsad::ContractError);
}

TEST(Csv, FaultFreeRunsOf25Hours) {
  std::istringstream in(csv_of_runs(2, 25 * 60 / 3, 0, false));
  const auto runs = dio::read_runs_csv(in);
  ASSERT_EQ(runs.size(), 2u);
  for (const auto& r : runs) {
    EXPECT_EQ(r.series.steps(), 500u);
    EXPECT_EQ(r.series.features(), 2u);
    EXPECT_EQ(r.series.dt_minutes(), 3.0);
    const auto l = r.series.labels_or_zero();
    EXPECT_TRUE(std::all_of(l.begin(), l.end(), [](auto v) { return v == 0; }));
  }
}

TEST(Csv, TestRunOf48Hours) {
  std::istringstream in(csv_of_runs(1, 48 * 60 / 3, 3, true));
  const auto runs = dio::read_runs_csv(in);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].series.steps(), 960u);
  EXPECT_EQ(runs[0].fault_id, 3);
  const auto& l = *runs[0].series.labels();
  EXPECT_EQ(l[479], 0);
  EXPECT_EQ(l[480], 1);
}

TEST(Csv, UnequalRunLengthsAreRejected) {
  std::string text = csv_of_runs(2, 10, 0, false);
  text.erase(text.rfind('\n', text.size() - 2) + 1);  // drop the last row
  std::istringstream in(text);
  EXPECT_THROW(dio::read_runs_csv(in), tsad::DataError);
}

TEST(Csv, MissingColumnIsNamed) {
  std::istringstream in("fault_id,timestep,x1\n0,0,1.0\n");
  try {
    dio::read_runs_csv(in);
    FAIL() << "expected SchemaError";
  } catch (const tsad::SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("run_id"), std::string::npos);
  }
}

TEST(Csv, NonMonotonicTimestepIsRejected) {
  std::istringstream in("fault_id,run_id,timestep,x1\n0,1,0,1.0\n0,1,2,1.0\n0,1,1,1.0\n");
  EXPECT_THROW(dio::read_runs_csv(in), tsad::DataError);
}

TEST(Csv, OnsetColumnAndDefaultOnset) {
  std::istringstream with_onset("fault_id,run_id,timestep,fault_onset,x1\n2,1,0,2,0\n2,1,1,2,0\n2,1,2,2,0\n2,1,3,2,0\n");
  const auto a = dio::read_runs_csv(with_onset);
  EXPECT_EQ(*a[0].series.labels(), (dio::Labels{0, 0, 1, 1}));

  dio::CsvSchema schema;
  schema.default_fault_onset = 1;
  std::istringstream plain("fault_id,run_id,timestep,x1\n2,1,0,0\n2,1,1,0\n2,1,2,0\n");
  EXPECT_EQ(*dio::read_runs_csv(plain, schema)[0].series.labels(), (dio::Labels{0, 1, 1}));
}

TEST(Csv, RoundTripIsExact) {
  dio::SynthConfig cfg;
  cfg.runs = 2;
  cfg.steps = 40;
  cfg.features = 5;
  cfg.fault_kind = dio::FaultKind::Drift;
  cfg.fault_onset = 20;
  cfg.seed = 11;
  const auto runs = dio::synth_generate(cfg);
  std::stringstream buf;
  dio::write_runs_csv(buf, runs);
  const auto back = dio::read_runs_csv(buf);
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(back[i].run_id, runs[i].run_id);
    EXPECT_EQ(back[i].fault_id, runs[i].fault_id);
    EXPECT_EQ(back[i].series.values(), runs[i].series.values());
    EXPECT_EQ(back[i].series.labels(), runs[i].series.labels());
  }
}

TEST(Norm, HandExampleAndConstantFeature) {
  std::vector<dio::RunRecord> train{{0, 0, dio::SeriesMatrix(2, 2, {1, 7, 3, 7})}};
  const auto stats = dio::fit_norm_stats(train);
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(stats.std[0], 1.0);
  EXPECT_DOUBLE_EQ(stats.std[1], 1e-6);
  const auto z = dio::apply_norm(train[0].series, stats);
  EXPECT_EQ(z.values(), (std::vector<double>{-1, 0, 1, 0}));
  EXPECT_THROW(dio::fit_norm_stats({}), tsad::ContractError);
}

TEST(Norm, TrainingConcatenationHasZeroMeanAndInverts) {
  std::vector<dio::RunRecord> train;
  for (std::uint64_t s = 0; s < 3; ++s) train.push_back({static_cast<std::uint32_t>(s), 0, random_series(50, 4, s)});
  const auto stats = dio::fit_norm_stats(train);
  std::vector<double> sum(4, 0.0);
  for (const auto& r : train) {
    const auto z = dio::apply_norm(r.series, stats);
    for (std::size_t t = 0; t < z.steps(); ++t) {
      for (std::size_t j = 0; j < 4; ++j) sum[j] += z.at(t, j);
    }
    const auto back = dio::invert_norm(z, stats);
    for (std::size_t i = 0; i < back.values().size(); ++i) EXPECT_NEAR(back.values()[i], r.series.values()[i], 1e-12);
  }
  for (double s : sum) EXPECT_LT(std::abs(s / 150.0), 1e-9);
}

TEST(Windows, Counts) {
  EXPECT_EQ(dio::window_count(10, {4, 1}), 7u);
  EXPECT_EQ(dio::window_count(10, {4, 2}), 4u);
  EXPECT_EQ(dio::window_count(10, {10, 3}), 1u);
  EXPECT_THROW(dio::window_count(3, {4, 1}), tsad::ContractError);
  EXPECT_EQ(dio::make_windows(random_series(10, 2, 1), {4, 2}).size(), 4u);
}

TEST(Windows, PlacedBackReproduceSeries) {
  const auto s = random_series(23, 3, 5);
  for (std::size_t stride : {1u, 2u, 5u}) {
    for (const auto& w : dio::make_windows(s, {6, stride})) {
      for (std::size_t t = 0; t < w.steps; ++t) {
        for (std::size_t d = 0; d < 3; ++d) ASSERT_EQ(w.at(t, d), s.at(w.start + t, d));
      }
    }
  }
}

TEST(Signature, ConstantAndSingleFeature) {
  const auto c = dio::signature_matrices(dio::SeriesMatrix(6, 2, std::vector<double>(12, 3.0)), 4);
  ASSERT_EQ(c.size(), 3u);
  for (const auto& m : c) {
    for (double v : m.values) EXPECT_DOUBLE_EQ(v, 9.0);
  }
  const auto one = dio::signature_matrices(dio::SeriesMatrix(4, 1, {1, 2, 3, 4}), 2);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_DOUBLE_EQ(one[0].values[0], 2.5);
  EXPECT_DOUBLE_EQ(one[2].values[0], 12.5);
  EXPECT_EQ(one[2].end, 3u);
  EXPECT_THROW(dio::signature_matrices(dio::SeriesMatrix(2, 1, {1, 2}), 3), tsad::ContractError);
}

TEST(Signature, SymmetricPositiveSemiDefinite) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_series(30, 6, seed);
    for (const auto& m : dio::signature_matrices(s, 3)) {
      Eigen::MatrixXd a(6, 6);
      for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
          ASSERT_EQ(m.at(i, j), m.at(j, i));
          a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.at(i, j);
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(Genad, TwoOfTenFeaturesMaskedInsideFold) {
  const auto s = random_series(20, 10, 3);
  const auto w = dio::make_windows(s, {20, 1}).front();
  nk::Rng rng(1, "test/genad");
  const auto m = dio::mask_features_genad(w, 0.2, 2, rng);
  std::set<std::size_t> masked;
  for (std::size_t t = 0; t < 20; ++t) {
    for (std::size_t d = 0; d < 10; ++d) {
      const bool on = m.mask[t * 10 + d] != 0;
      if (on) {
        EXPECT_TRUE(t >= 8 && t < 12);
        EXPECT_EQ(m.window.at(t, d), 0.0);
        masked.insert(d);
      } else {
        EXPECT_EQ(m.window.at(t, d), w.at(t, d));
      }
    }
  }
  EXPECT_EQ(masked.size(), 2u);
  for (std::size_t t = 8; t < 12; ++t) {
    for (std::size_t d : masked) EXPECT_EQ(m.mask[t * 10 + d], 1);
  }
}

TEST(Genad, FullFractionZeroesWholeFold) {
  const auto w = dio::make_windows(random_series(10, 3, 4), {10, 1}).front();
  nk::Rng rng(2, "test/genad");
  const auto m = dio::mask_features_genad(w, 1.0, 4, rng);
  for (std::size_t t = 8; t < 10; ++t) {
    for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(m.window.at(t, d), 0.0);
  }
}

TEST(Genad, StrictModeRequiresWidthDivisibleByFive) {
  const auto w = dio::make_windows(random_series(12, 3, 4), {12, 1}).front();
  nk::Rng rng(2, "test/genad");
  EXPECT_THROW(dio::mask_features_genad(w, 0.34, 0, rng), tsad::ContractError);
  EXPECT_NO_THROW(dio::mask_features_genad(w, 0.34, 4, rng, false));
  EXPECT_EQ(dio::genad_fold_range(12, 4, false), (std::pair<std::size_t, std::size_t>{8, 12}));
  EXPECT_THROW(dio::genad_mask_count(10, 0.01), tsad::ContractError);
}

TEST(Genad, SweepMasksEveryFeatureOnce) {
  const std::size_t d = 9;
  const auto w = dio::make_windows(random_series(10, d, 6), {10, 1}).front();
  dio::GenadMaskSweep sweep(d, 2.0 / 9.0, nk::Rng(3, "test/sweep"));
  EXPECT_EQ(sweep.per_call(), 2u);
  EXPECT_EQ(sweep.calls_per_sweep(), 5u);
  for (int round = 0; round < 3; ++round) {
    std::vector<int> hits(d, 0);
    for (std::size_t c = 0; c < sweep.calls_per_sweep(); ++c) {
      const auto m = sweep.next(w, c % 5);
      const auto [b, e] = dio::genad_fold_range(10, c % 5);
      for (std::size_t j = 0; j < d; ++j) hits[j] += m.mask[b * d + j];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(Donut, RateZeroAndConcentrationAndDeterminism) {
  const auto w = dio::make_windows(random_series(100, 100, 8), {100, 1}).front();
  nk::Rng r0(1, "test/donut");
  const auto none = dio::mask_cells_donut(w, 0.0, r0);
  EXPECT_EQ(none.window.values, w.values);
  EXPECT_TRUE(std::all_of(none.mask.begin(), none.mask.end(), [](auto v) { return v == 0; }));

  nk::Rng a(9, "test/donut"), b(9, "test/donut");
  const auto ma = dio::mask_cells_donut(w, 0.5, a);
  const auto mb = dio::mask_cells_donut(w, 0.5, b);
  EXPECT_EQ(ma.mask, mb.mask);
  double frac = 0;
  for (auto v : ma.mask) frac += v;
  frac /= static_cast<double>(ma.mask.size());
  EXPECT_NEAR(frac, 0.5, 0.03);
  for (std::size_t i = 0; i < ma.mask.size(); ++i) {
    EXPECT_EQ(ma.window.values[i], ma.mask[i] ? 0.0 : w.values[i]);
  }
  EXPECT_THROW(dio::mask_cells_donut(w, 1.0, a), tsad::ContractError);
}

TEST(Synth, DeterministicAndLabelled) {
  dio::SynthConfig cfg;
  cfg.runs = 2;
  cfg.steps = 200;
  cfg.features = 6;
  cfg.fault_kind = dio::FaultKind::Step;
  cfg.fault_onset = 100;
  cfg.seed = 4;
  const auto a = dio::synth_generate(cfg);
  const auto b = dio::synth_generate(cfg);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].series.values(), b[i].series.values());
  dio::Labels expected(200, 0);
  std::fill(expected.begin() + 100, expected.end(), 1);
  EXPECT_EQ(*a[0].series.labels(), expected);
  EXPECT_EQ(a[0].fault_id, 1);
}

TEST(Synth, CouplingIsScaledOrthogonal) {
  for (std::size_t d : {2u, 5u, 12u}) {
    const auto a = dio::synth_coupling_matrix(d, 7);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        a.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const Eigen::MatrixXd gram = m * m.transpose();
    EXPECT_LT((gram - 0.81 * Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 0.9, 1e-9);
  }
}

TEST(Synth, FaultKindsTouchOnlyFaultySpanAndFeatures) {
  for (auto kind : {dio::FaultKind::Step, dio::FaultKind::Drift, dio::FaultKind::Stuck, dio::FaultKind::Noise}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      dio::SynthConfig clean;
      clean.runs = 1;
      clean.steps = 60;
      clean.features = 8;
      clean.seed = seed;
      auto faulty = clean;
      faulty.fault_kind = kind;
      faulty.fault_onset = 30;
      const auto base = dio::synth_generate(clean)[0].series;
      const auto run = dio::synth_generate(faulty)[0];
      const auto touched = dio::synth_fault_features(faulty);
      EXPECT_EQ(touched.size(), 2u);
      const auto& l = *run.series.labels();
      for (std::size_t t = 0; t < 60; ++t) {
        EXPECT_EQ(l[t], t >= 30 ? 1 : 0);
        for (std::size_t d = 0; d < 8; ++d) {
          const bool affected = t >= 30 && std::count(touched.begin(), touched.end(), d) > 0;
          if (!affected) {
            EXPECT_EQ(run.series.at(t, d), base.at(t, d));
          } else if (kind == dio::FaultKind::Stuck) {
            EXPECT_EQ(run.series.at(t, d), base.at(30, d));
          } else if (kind != dio::FaultKind::Noise || t > 30) {
            EXPECT_NE(run.series.at(t, d), base.at(t, d));
          }
        }
      }
    }
  }
}

TEST(Synth, StepFaultStandsOutAfterNormalization) {
  dio::SynthConfig normal;
  normal.runs = 4;
  normal.steps = 500;
  normal.features = 8;
  normal.seed = 21;
  auto faulty = normal;
  faulty.runs = 1;
  faulty.first_run_id = 100;
  faulty.fault_kind = dio::FaultKind::Step;
  faulty.fault_onset = 160;
  faulty.fault_magnitude = 5.0;
  const auto stats = dio::fit_norm_stats(dio::synth_generate(normal));
  const auto z = dio::apply_norm(dio::synth_generate(faulty)[0].series, stats);
  for (std::size_t d : dio::synth_fault_features(faulty)) {
    double mean_abs = 0;
    for (std::size_t t = 160; t < 500; ++t) mean_abs += std::abs(z.at(t, d));
    mean_abs /= 340.0;
    EXPECT_GE(mean_abs, 3.0) << "feature " << d;
  }
}

TEST(Synth, RejectsBadConfig) {
  EXPECT_THROW(dio::parse_fault_kind("spike"), tsad::ConfigError);
  EXPECT_EQ(dio::parse_fault_kind("stuck"), dio::FaultKind::Stuck);
  dio::SynthConfig cfg;
  cfg.features = 1;
  EXPECT_THROW(dio::synth_generate(cfg), tsad::ConfigError);
  cfg.features = 2;
  cfg.steps = 15;
  EXPECT_THROW(dio::synth_generate(cfg), tsad::ConfigError);
}
