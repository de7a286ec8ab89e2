#include "misi/density.hpp"

#include "misi/error.hpp"
#include "misi/kernels.hpp"

#include <cmath>
#include <numbers>

namespace misi {

void BandwidthSet::set(const std::string& name, double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw InvalidArgument("bandwidth for '" + name + "' must be positive and finite");
    values_[name] = bandwidth;
}

double BandwidthSet::at(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) throw MissingBandwidth("no bandwidth for '" + name + "'");
    return it->second;
}

BandwidthSet select_bandwidths(const IoDataset& data, std::span<const std::string> names) {
    BandwidthSet out;
    for (const auto& n : names) {
        if (out.contains(n)) continue;
        out.set(n, isj_bandwidth(data.column(n)).bandwidth);
    }
    return out;
}

Kde fit(std::span<const SampleColumn> columns, const BandwidthSet& bandwidths) {
    if (columns.empty()) throw InvalidArgument("fit needs at least one column");
    if (columns.size() > kernels::kMaxVariables) throw InvalidArgument("at most 32 variables");
    Kde kde;
    const auto m = columns.front().size();
    double prod_b = 1.0;
    for (const auto& c : columns) {
        if (c.size() != m)
            throw LengthMismatch("column '" + c.name() + "' has " + std::to_string(c.size()) +
                                 " samples, expected " + std::to_string(m));
        const double b = bandwidths.at(c.name());
        kde.names_.push_back(c.name());
        kde.centers_.emplace_back(c.values().begin(), c.values().end());
        kde.bandwidths_.push_back(b);
        prod_b *= b;
    }
    const double d = static_cast<double>(columns.size());
    kde.normalization_ =
        std::pow(2.0 * std::numbers::pi, -0.5 * d) / (static_cast<double>(m) * prod_b);
    return kde;
}

double Kde::density(std::span<const double> point) const {
    if (point.size() != dim())
        throw DimensionMismatch("point has " + std::to_string(point.size()) + " coordinates, kde has " +
                                std::to_string(dim()));
    for (double x : point)
        if (!std::isfinite(x)) throw InvalidArgument("density point must be finite");

    const std::size_t n = size();
    double total = 0.0;
    for (std::size_t b = 0; b < n; b += kernels::kBlock) {
        const std::size_t end = std::min(n, b + kernels::kBlock);
        double partial = 0.0;
        for (std::size_t k = b; k < end; ++k) {
            double exponent = 0.0;
            for (std::size_t j = 0; j < dim(); ++j) {
                const double u = (point[j] - centers_[j][k]) / bandwidths_[j];
                exponent += u * u;
            }
            partial += std::exp(-0.5 * exponent);
        }
        total += partial;
    }
    return normalization_ * total;
}

namespace {

kernels::KernelProblem make_problem(const std::vector<std::vector<double>>& centers,
                                    std::span<const double> bandwidths,
                                    std::span<const std::span<const double>> points) {
    if (points.size() != centers.size())
        throw DimensionMismatch("points have " + std::to_string(points.size()) +
                                " variables, kde has " + std::to_string(centers.size()));
    kernels::KernelProblem p;
    for (std::size_t j = 0; j < centers.size(); ++j) {
        p.centers.emplace_back(centers[j]);
        p.points.push_back(points[j]);
        p.inv_two_h2.push_back(1.0 / (2.0 * bandwidths[j] * bandwidths[j]));
        for (double x : points[j])
            if (!std::isfinite(x)) throw InvalidArgument("density point must be finite");
    }
    p.subsets.push_back(static_cast<kernels::SubsetMask>((std::uint64_t{1} << centers.size()) - 1));
    return p;
}

}  // namespace

std::vector<double> Kde::density_batch(std::span<const std::span<const double>> points) const {
    auto out = kernels::kernel_sums(make_problem(centers_, bandwidths_, points));
    for (auto& v : out) v *= normalization_;
    return out;
}

std::vector<double> Kde::density_batch_serial(std::span<const std::span<const double>> points) const {
    auto out = kernels::kernel_sums_serial(make_problem(centers_, bandwidths_, points));
    for (auto& v : out) v *= normalization_;
    return out;
}

}  // namespace misi
