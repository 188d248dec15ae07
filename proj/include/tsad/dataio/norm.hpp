#pragma once

#include <vector>

#include "tsad/dataio/series.hpp"

namespace tsad::dataio {

/// Per-feature z-score statistics. std entries are floored at std_floor.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  double std_floor = 1e-6;
};

/// Population mean/std over the concatenation of all training runs.
NormStats fit_norm_stats(const std::vector<RunRecord>& train, double std_floor = 1e-6);
SeriesMatrix apply_norm(const SeriesMatrix& series, const NormStats& stats);
SeriesMatrix invert_norm(const SeriesMatrix& series, const NormStats& stats);

}  // namespace tsad::dataio
