#pragma once

#include "misi/dataset.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace misi {

struct CurveBin {
    double lo = 0.0;
    double hi = 0.0;
    double center = 0.0;
    std::size_t count = 0;
    std::optional<double> mean;  ///< empty iff count == 0
};

struct ResponseCurve {
    std::string cv;
    std::string qoi;
    /// (x, y) sorted by x, ties by y.
    std::vector<std::pair<double, double>> scatter;
    std::vector<CurveBin> bins;
    /// Pooled within-bin standard deviation over sqrt of the harmonic-mean
    /// bin count: the typical standard error of one bin mean.
    double pooled_std_error = 0.0;

    /// max - min over nonempty bin means.
    double mean_range() const;
};

/// Scatter of qoi against cv plus means over `bins` equal-width bins
/// spanning the observed cv range. Throws UnknownColumn, InvalidArgument
/// (bins < 2, constant cv).
ResponseCurve response_curve(const IoDataset& data, const std::string& cv, const std::string& qoi,
                             std::size_t bins);

}  // namespace misi
