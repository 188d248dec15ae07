#include "tsad/scoring/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tsad/errors.hpp"

namespace tsad::scoring {

namespace {

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ContractError(std::string(what) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
}

void check_variances(std::span<const double> var) {
  for (double v : var) {
    if (!(v > 0)) throw ContractError("variance must be positive");
  }
}

}  // namespace

std::vector<double> reduce_errors(const ErrorSeries& errors) {
  if (errors.features == 0 || errors.values.size() != errors.steps * errors.features) {
    throw DimensionError("error series shape does not match its values");
  }
  std::vector<double> out(errors.steps);
  for (std::size_t t = 0; t < errors.steps; ++t) {
    const auto row = std::span<const double>(errors.values).subspan(t * errors.features, errors.features);
    if (errors.reduction == Reduction::Max) {
      out[t] = *std::max_element(row.begin(), row.end());
    } else {
      double s = 0.0;
      for (double v : row) s += v;
      out[t] = s / static_cast<double>(errors.features);
    }
  }
  return out;
}

GaussianModel fit_gaussian(std::span<const double> errors, std::size_t columns, double variance_floor) {
  if (columns == 0 || errors.size() % columns != 0) throw DimensionError("error matrix is not N x M");
  const std::size_t n = errors.size() / columns;
  if (n < 2) throw ContractError("fit_gaussian needs at least two error vectors");
  if (!(variance_floor > 0)) throw ContractError("variance floor must be positive");
  GaussianModel model{std::vector<double>(columns, 0.0), std::vector<double>(columns, 0.0), variance_floor};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns; ++j) model.mean[j] += errors[i * columns + j];
  }
  for (double& m : model.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns; ++j) {
      const double e = errors[i * columns + j] - model.mean[j];
      model.variance[j] += e * e;
    }
  }
  for (double& v : model.variance) v = std::max(v / static_cast<double>(n), variance_floor);
  return model;
}

double nll(const GaussianModel& model, std::span<const double> e) {
  check_same_size(e.size(), model.dim(), "nll");
  double acc = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double d = e[j] - model.mean[j];
    acc += std::log(2.0 * std::numbers::pi * model.variance[j]) + d * d / model.variance[j];
  }
  return 0.5 * acc;
}

std::vector<double> ewma(std::span<const double> scores, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractError("ewma alpha must lie in (0, 1]");
  if (scores.empty()) throw ContractError("ewma needs at least one score");
  std::vector<double> out(scores.size());
  out[0] = scores[0];
  for (std::size_t t = 1; t < scores.size(); ++t) out[t] = alpha * scores[t] + (1.0 - alpha) * out[t - 1];
  return out;
}

std::vector<std::size_t> coverage_counts(const std::vector<OverlapScore>& predictions, std::size_t steps) {
  std::vector<std::size_t> counts(steps, 0);
  for (const auto& p : predictions) {
    for (std::size_t i = 0; i < p.values.size() && p.target_start + i < steps; ++i) ++counts[p.target_start + i];
  }
  return counts;
}

std::vector<double> aggregate_overlaps(const std::vector<OverlapScore>& predictions, std::size_t steps) {
  std::vector<double> sum(steps, 0.0);
  const auto counts = coverage_counts(predictions, steps);
  for (const auto& p : predictions) {
    for (std::size_t i = 0; i < p.values.size() && p.target_start + i < steps; ++i) sum[p.target_start + i] += p.values[i];
  }
  std::vector<std::optional<double>> mean(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (counts[t] > 0) mean[t] = sum[t] / static_cast<double>(counts[t]);
  }
  return fill_uncovered(mean);
}

std::vector<double> fill_uncovered(const std::vector<std::optional<double>>& scores) {
  const auto first = std::find_if(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); });
  if (first == scores.end()) throw ContractError("no time step carries a score");
  std::vector<double> out(scores.size());
  double last = **first;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (scores[t]) last = *scores[t];
    out[t] = last;
  }
  return out;
}

double gaussian_log_likelihood(std::span<const double> x, std::span<const double> mean, std::span<const double> var) {
  check_same_size(x.size(), mean.size(), "gaussian_log_likelihood");
  check_same_size(x.size(), var.size(), "gaussian_log_likelihood");
  check_variances(var);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[i];
    acc -= 0.5 * (std::log(2.0 * std::numbers::pi * var[i]) + d * d / var[i]);
  }
  return acc;
}

double kl_diag_gaussian(std::span<const double> mean_q, std::span<const double> var_q, std::span<const double> mean_p,
                        std::span<const double> var_p) {
  check_same_size(mean_q.size(), var_q.size(), "kl_diag_gaussian");
  check_same_size(mean_q.size(), mean_p.size(), "kl_diag_gaussian");
  check_same_size(mean_q.size(), var_p.size(), "kl_diag_gaussian");
  check_variances(var_q);
  check_variances(var_p);
  double acc = 0.0;
  for (std::size_t i = 0; i < mean_q.size(); ++i) {
    const double d = mean_q[i] - mean_p[i];
    acc += 0.5 * (std::log(var_p[i] / var_q[i]) + (var_q[i] + d * d) / var_p[i] - 1.0);
  }
  return acc;
}

double elbo(std::span<const double> x, const DiagGaussian& posterior, const DiagGaussian& reconstruction,
            const DiagGaussian& prior) {
  return gaussian_log_likelihood(x, reconstruction.mean, reconstruction.variance) -
         kl_diag_gaussian(posterior.mean, posterior.variance, prior.mean, prior.variance);
}

double reconstruction_probability(std::span<const double> x, const Decoder& decoder, const DiagGaussian& posterior,
                                  std::size_t samples, numkit::Rng& rng) {
  if (samples == 0) throw ContractError("reconstruction_probability needs L >= 1");
  check_same_size(posterior.mean.size(), posterior.variance.size(), "posterior");
  check_variances(posterior.variance);
  std::vector<double> z(posterior.mean.size());
  double acc = 0.0;
  for (std::size_t l = 0; l < samples; ++l) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = posterior.mean[i] + std::sqrt(posterior.variance[i]) * rng.normal();
    const auto rec = decoder(z);
    acc += gaussian_log_likelihood(x, rec.mean, rec.variance);
  }
  return acc / static_cast<double>(samples);
}

double convex_combine(double a, double b, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("lambda must lie in [0, 1]");
  if (!std::isfinite(a) || !std::isfinite(b)) throw ContractError("convex_combine needs finite inputs");
  return lambda * a + (1.0 - lambda) * b;
}

std::vector<double> convex_combine(std::span<const double> a, std::span<const double> b, double lambda) {
  check_same_size(a.size(), b.size(), "convex_combine");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = convex_combine(a[i], b[i], lambda);
  return out;
}

}  // namespace tsad::scoring
