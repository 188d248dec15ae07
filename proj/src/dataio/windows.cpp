#include "tsad/dataio/windows.hpp"

#include <algorithm>
#include <string>

#include "tsad/errors.hpp"

namespace tsad::dataio {

namespace {

void check_spec(std::size_t steps, const WindowSpec& spec) {
  if (spec.width == 0 || spec.stride == 0) throw ContractError("window width and stride must be >= 1");
  if (spec.width > steps) {
    throw ContractError("window width " + std::to_string(spec.width) + " exceeds series length " + std::to_string(steps));
  }
}

}  // namespace

std::size_t window_count(std::size_t steps, const WindowSpec& spec) {
  check_spec(steps, spec);
  return (steps - spec.width) / spec.stride + 1;
}

std::vector<Window> make_windows(const SeriesMatrix& series, const WindowSpec& spec) {
  const std::size_t count = window_count(series.steps(), spec);
  const std::size_t d = series.features();
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Window w{k * spec.stride, spec.width, d, {}};
    const auto first = series.values().begin() + static_cast<std::ptrdiff_t>(w.start * d);
    w.values.assign(first, first + static_cast<std::ptrdiff_t>(spec.width * d));
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace tsad::dataio
