#pragma once

#include <cstddef>
#include <vector>

#include "tsad/dataio/series.hpp"

namespace tsad::dataio {

struct WindowSpec {
  std::size_t width = 32;
  std::size_t stride = 1;
};

/// A w x D slice of a series, row-major, starting at time index `start`.
struct Window {
  std::size_t start = 0;
  std::size_t steps = 0;
  std::size_t features = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t d) const { return values[t * features + d]; }
  double& at(std::size_t t, std::size_t d) { return values[t * features + d]; }
};

/// floor((T - w) / s) + 1 for w <= T.
std::size_t window_count(std::size_t steps, const WindowSpec& spec);

/// Windows at starts 0, s, 2s, ... while start + w <= T.
std::vector<Window> make_windows(const SeriesMatrix& series, const WindowSpec& spec);

}  // namespace tsad::dataio
