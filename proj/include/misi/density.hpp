#pragma once

#include "misi/dataset.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace misi {

/// Per-variable smoothing bandwidths. A variable has exactly one bandwidth,
/// reused in every joint and marginal estimate it appears in.
class BandwidthSet {
public:
    /// Throws InvalidArgument unless `bandwidth` is finite and > 0.
    void set(const std::string& name, double bandwidth);
    bool contains(const std::string& name) const { return values_.contains(name); }
    /// Throws MissingBandwidth.
    double at(const std::string& name) const;

    const std::map<std::string, double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool operator==(const BandwidthSet&) const = default;

private:
    std::map<std::string, double> values_;
};

struct IsjResult {
    double bandwidth = 0.0;
    /// Set when the fixed-point equation had no bracketed root and the
    /// Gaussian-reference rule was returned instead.
    bool fallback = false;
};

/// Improved Sheather-Jones plug-in bandwidth (Botev et al. fixed point on a
/// 2^14-point DCT grid). Samples are standardized first, so the result is
/// scale-equivariant. Throws DegenerateSample if M < 8 or all values equal.
IsjResult isj_bandwidth(std::span<const double> samples);
inline IsjResult isj_bandwidth(const SampleColumn& column) { return isj_bandwidth(column.values()); }

/// (4 / (3M))^(1/5) * sample standard deviation.
double gaussian_reference_bandwidth(std::span<const double> samples);

/// ISJ bandwidth for each named column of `data`, selected once up front.
BandwidthSet select_bandwidths(const IoDataset& data, std::span<const std::string> names);

/// Gaussian product-kernel density estimate over d variables with diagonal
/// bandwidths. Immutable after construction; all queries are thread-safe.
class Kde {
public:
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t dim() const noexcept { return centers_.size(); }
    std::size_t size() const noexcept { return centers_.empty() ? 0 : centers_.front().size(); }
    std::span<const double> bandwidths() const noexcept { return bandwidths_; }
    std::span<const double> centers(std::size_t j) const { return centers_.at(j); }

    /// Direct evaluation of the kernel sum at one point. Throws
    /// DimensionMismatch or InvalidArgument for non-finite coordinates.
    double density(std::span<const double> point) const;

    /// Densities at n points given column-major (one span per variable).
    /// The OpenMP path and the serial reference return identical values.
    std::vector<double> density_batch(std::span<const std::span<const double>> points) const;
    std::vector<double> density_batch_serial(std::span<const std::span<const double>> points) const;

    /// (2 pi)^(-d/2) / (M' prod b_j): the factor turning a kernel sum into a density.
    double normalization() const noexcept { return normalization_; }

private:
    friend Kde fit(std::span<const SampleColumn> columns, const BandwidthSet& bandwidths);

    std::vector<std::string> names_;
    std::vector<std::vector<double>> centers_;
    std::vector<double> bandwidths_;
    double normalization_ = 0.0;
};

/// Throws MissingBandwidth, LengthMismatch, or InvalidArgument (no columns,
/// more than 32 variables).
Kde fit(std::span<const SampleColumn> columns, const BandwidthSet& bandwidths);

}  // namespace misi
