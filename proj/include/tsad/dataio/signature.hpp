#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tsad/dataio/series.hpp"

namespace tsad::dataio {

/// Pairwise inner-product matrix of the segment ending at time `end`.
struct SignatureMatrix {
  std::size_t end = 0;
  std::size_t features = 0;
  std::vector<double> values;  // D x D, row-major

  double at(std::size_t i, std::size_t j) const { return values[i * features + j]; }
};

/// For every end time t in [w-1, T):
///   S_ij = (1 / scale) * sum_{tau = t-w+1}^{t} x_i(tau) x_j(tau)
/// scale defaults to w.
std::vector<SignatureMatrix> signature_matrices(const SeriesMatrix& series, std::size_t width,
                                                std::optional<double> scale = std::nullopt);

}  // namespace tsad::dataio
