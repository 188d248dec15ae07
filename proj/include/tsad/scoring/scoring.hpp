#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tsad/numkit/rng.hpp"

namespace tsad::scoring {

enum class Reduction { Mean, Max };

/// T x D per-step, per-feature errors (row-major) plus how to reduce them.
struct ErrorSeries {
  std::size_t steps = 0;
  std::size_t features = 0;
  std::vector<double> values;
  Reduction reduction = Reduction::Mean;

  double at(std::size_t t, std::size_t d) const { return values[t * features + d]; }
};

std::vector<double> reduce_errors(const ErrorSeries& errors);

struct GaussianModel {
  std::vector<double> mean;
  std::vector<double> variance;
  double variance_floor = 1e-6;

  std::size_t dim() const noexcept { return mean.size(); }
};

/// Population mean and variance per column of an N x M row-major matrix.
GaussianModel fit_gaussian(std::span<const double> errors, std::size_t columns, double variance_floor = 1e-6);
/// 0.5 * sum_j [ln(2 pi var_j) + (e_j - mean_j)^2 / var_j]
double nll(const GaussianModel& model, std::span<const double> e);

/// s_0 = x_0, s_t = alpha x_t + (1 - alpha) s_{t-1}
std::vector<double> ewma(std::span<const double> scores, double alpha);

/// Scores a forecaster made for steps target_start .. target_start + k - 1.
struct OverlapScore {
  std::size_t target_start = 0;
  std::vector<double> values;
};

/// Mean of all scores landing on each step; targets at or beyond T are
/// dropped and uncovered steps are filled with fill_uncovered.
std::vector<double> aggregate_overlaps(const std::vector<OverlapScore>& predictions, std::size_t steps);
std::vector<std::size_t> coverage_counts(const std::vector<OverlapScore>& predictions, std::size_t steps);

/// Copy-first warm-up rule: steps before the first value take that value,
/// later gaps repeat the previous value. At least one value required.
std::vector<double> fill_uncovered(const std::vector<std::optional<double>>& scores);

/// log N(x; mean, diag(var)), summed over coordinates.
double gaussian_log_likelihood(std::span<const double> x, std::span<const double> mean, std::span<const double> var);
/// KL(N(mq, vq) || N(mp, vp)) for diagonal Gaussians.
double kl_diag_gaussian(std::span<const double> mean_q, std::span<const double> var_q, std::span<const double> mean_p,
                        std::span<const double> var_p);

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> variance;
};

/// log p(x | z) evaluated at the reconstruction Gaussian, minus KL(q || prior).
double elbo(std::span<const double> x, const DiagGaussian& posterior, const DiagGaussian& reconstruction,
            const DiagGaussian& prior);

/// Maps a latent sample to the Gaussian over x it decodes to.
using Decoder = std::function<DiagGaussian(std::span<const double> z)>;

/// Monte-Carlo mean of log p(x | z) over `samples` draws z ~ posterior.
double reconstruction_probability(std::span<const double> x, const Decoder& decoder, const DiagGaussian& posterior,
                                  std::size_t samples, numkit::Rng& rng);

double convex_combine(double a, double b, double lambda);
std::vector<double> convex_combine(std::span<const double> a, std::span<const double> b, double lambda);

}  // namespace tsad::scoring
