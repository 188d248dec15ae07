#include "tsad/dataio/masking.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tsad/errors.hpp"

namespace tsad::dataio {

namespace {

constexpr std::size_t kFolds = 5;

MaskedWindow mask_features_in_fold(const Window& window, std::span<const std::size_t> features,
                                   std::size_t fold_index, bool strict) {
  const auto [begin, end] = genad_fold_range(window.steps, fold_index, strict);
  MaskedWindow out{window, std::vector<std::uint8_t>(window.values.size(), 0)};
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t f : features) {
      out.window.at(t, f) = 0.0;
      out.mask[t * window.features + f] = 1;
    }
  }
  return out;
}

}  // namespace

std::pair<std::size_t, std::size_t> genad_fold_range(std::size_t steps, std::size_t fold_index, bool strict) {
  if (fold_index >= kFolds) throw ContractError("fold index must be < 5");
  if (strict && steps % kFolds != 0) {
    throw ContractError("window length " + std::to_string(steps) + " is not divisible by 5");
  }
  if (steps < kFolds) throw ContractError("window shorter than five folds");
  const std::size_t fold = steps / kFolds;
  const std::size_t begin = fold_index * fold;
  const std::size_t end = fold_index + 1 == kFolds ? steps : begin + fold;
  return {begin, end};
}

std::size_t genad_mask_count(std::size_t features, double fraction) {
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(features)));
  if (count < 1 || count > features) {
    throw ContractError("mask fraction " + std::to_string(fraction) + " selects " + std::to_string(count) + " of " +
                        std::to_string(features) + " features");
  }
  return count;
}

MaskedWindow mask_features_genad(const Window& window, double fraction, std::size_t fold_index, numkit::Rng& rng,
                                 bool strict) {
  const std::size_t count = genad_mask_count(window.features, fraction);
  std::vector<std::size_t> order(window.features);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  return mask_features_in_fold(window, std::span<const std::size_t>(order.data(), count), fold_index, strict);
}

GenadMaskSweep::GenadMaskSweep(std::size_t features, double fraction, numkit::Rng rng, bool strict)
    : features_(features), per_call_(genad_mask_count(features, fraction)), rng_(rng), strict_(strict) {
  reshuffle();
}

void GenadMaskSweep::reshuffle() {
  order_.resize(features_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  rng_.shuffle(std::span<std::size_t>(order_));
  cursor_ = 0;
}

std::size_t GenadMaskSweep::calls_per_sweep() const noexcept { return (features_ + per_call_ - 1) / per_call_; }

MaskedWindow GenadMaskSweep::next(const Window& window, std::size_t fold_index) {
  if (window.features != features_) throw DimensionError("mask sweep built for a different feature count");
  if (cursor_ >= order_.size()) reshuffle();
  const std::size_t take = std::min(per_call_, order_.size() - cursor_);
  auto chosen = std::span<const std::size_t>(order_.data() + cursor_, take);
  cursor_ += take;
  return mask_features_in_fold(window, chosen, fold_index, strict_);
}

MaskedWindow mask_cells_donut(const Window& window, double rate, numkit::Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("mask rate must be in [0, 1)");
  MaskedWindow out{window, std::vector<std::uint8_t>(window.values.size(), 0)};
  for (std::size_t i = 0; i < out.mask.size(); ++i) {
    if (rng.bernoulli(rate)) {
      out.mask[i] = 1;
      out.window.values[i] = 0.0;
    }
  }
  return out;
}

}  // namespace tsad::dataio
