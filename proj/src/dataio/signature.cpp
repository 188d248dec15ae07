#include "tsad/dataio/signature.hpp"

#include <string>

#include "tsad/errors.hpp"

namespace tsad::dataio {

std::vector<SignatureMatrix> signature_matrices(const SeriesMatrix& series, std::size_t width,
                                                std::optional<double> scale) {
  if (width == 0 || width > series.steps()) {
    throw ContractError("signature window " + std::to_string(width) + " invalid for series length " +
                        std::to_string(series.steps()));
  }
  const double divisor = scale.value_or(static_cast<double>(width));
  if (!(divisor > 0)) throw ContractError("signature scale must be positive");
  const std::size_t d = series.features();
  std::vector<SignatureMatrix> out;
  out.reserve(series.steps() - width + 1);
  for (std::size_t end = width - 1; end < series.steps(); ++end) {
    SignatureMatrix m{end, d, std::vector<double>(d * d, 0.0)};
    for (std::size_t tau = end + 1 - width; tau <= end; ++tau) {
      const auto row = series.row(tau);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) m.values[i * d + j] += row[i] * row[j];
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        m.values[i * d + j] /= divisor;
        m.values[j * d + i] = m.values[i * d + j];
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace tsad::dataio
