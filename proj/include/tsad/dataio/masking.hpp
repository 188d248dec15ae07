#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsad/dataio/windows.hpp"
#include "tsad/numkit/rng.hpp"

namespace tsad::dataio {

struct MaskedWindow {
  Window window;                    // input with masked cells set to zero
  std::vector<std::uint8_t> mask;   // w x D, 1 where a cell was zeroed
};

/// Time range [begin, end) of fold `fold_index` when a window of `steps`
/// rows is cut into five folds. Strict mode requires steps % 5 == 0;
/// otherwise folds have floor(steps / 5) rows and the last fold takes the
/// remainder.
std::pair<std::size_t, std::size_t> genad_fold_range(std::size_t steps, std::size_t fold_index, bool strict = true);

/// Number of features masked per call: round(fraction * D).
std::size_t genad_mask_count(std::size_t features, double fraction);

/// Zeros round(fraction * D) randomly chosen features inside one fold.
MaskedWindow mask_features_genad(const Window& window, double fraction, std::size_t fold_index, numkit::Rng& rng,
                                 bool strict = true);

/// Masks every feature exactly once per sweep: each call takes the next
/// round(fraction * D) features of a shuffled permutation (the final call of
/// a sweep may take fewer). A new permutation is drawn when a sweep ends.
class GenadMaskSweep {
 public:
  GenadMaskSweep(std::size_t features, double fraction, numkit::Rng rng, bool strict = true);

  MaskedWindow next(const Window& window, std::size_t fold_index);
  std::size_t calls_per_sweep() const noexcept;
  std::size_t per_call() const noexcept { return per_call_; }

 private:
  void reshuffle();

  std::size_t features_;
  std::size_t per_call_;
  numkit::Rng rng_;
  bool strict_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Each cell independently zeroed with probability `rate` in [0, 1).
MaskedWindow mask_cells_donut(const Window& window, double rate, numkit::Rng& rng);

}  // namespace tsad::dataio
