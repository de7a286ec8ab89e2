#include "misi/curve.hpp"

#include "misi/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace misi {

double ResponseCurve::mean_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& b : bins)
        if (b.mean) {
            lo = std::min(lo, *b.mean);
            hi = std::max(hi, *b.mean);
        }
    return hi >= lo ? hi - lo : 0.0;
}

ResponseCurve response_curve(const IoDataset& data, const std::string& cv, const std::string& qoi,
                             std::size_t bins) {
    if (bins < 2) throw InvalidArgument("a response curve needs at least 2 bins");
    const auto x = data.column(cv).values();
    const auto y = data.column(qoi).values();

    ResponseCurve c;
    c.cv = cv;
    c.qoi = qoi;
    c.scatter.reserve(x.size());
    for (std::size_t m = 0; m < x.size(); ++m) c.scatter.emplace_back(x[m], y[m]);
    std::sort(c.scatter.begin(), c.scatter.end());

    const double lo = c.scatter.front().first;
    const double hi = c.scatter.back().first;
    if (!(hi > lo)) throw InvalidArgument("column '" + cv + "' is constant; bins are undefined");
    const double width = (hi - lo) / static_cast<double>(bins);

    std::vector<std::vector<double>> members(bins);
    for (const auto& [xv, yv] : c.scatter) {
        const auto b = std::min(bins - 1, static_cast<std::size_t>((xv - lo) / width));
        members[b].push_back(yv);
    }
    double ss = 0.0;
    std::size_t dof = 0;
    double inv_count = 0.0;
    std::size_t nonempty = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        CurveBin bin;
        bin.lo = lo + width * static_cast<double>(b);
        bin.hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
        bin.center = 0.5 * (bin.lo + bin.hi);
        bin.count = members[b].size();
        if (bin.count > 0) {
            double s = 0.0;
            for (double v : members[b]) s += v;
            const double mean = s / static_cast<double>(bin.count);
            bin.mean = mean;
            for (double v : members[b]) ss += (v - mean) * (v - mean);
            dof += bin.count - 1;
            inv_count += 1.0 / static_cast<double>(bin.count);
            ++nonempty;
        }
        c.bins.push_back(bin);
    }
    if (dof > 0) c.pooled_std_error = std::sqrt(ss / static_cast<double>(dof) * inv_count / static_cast<double>(nonempty));
    return c;
}

}  // namespace misi
