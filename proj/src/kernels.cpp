#include "misi/kernels.hpp"

#include "misi/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace misi::kernels {
namespace {

struct Scratch {
    // exp factors for one block, variable-major: e[j * kBlock + i]
    std::vector<double> e;
    std::vector<double> partial;

    explicit Scratch(const KernelProblem& p) : e(p.dim() * kBlock), partial(p.subsets.size()) {}
};

SubsetMask used_variables(const KernelProblem& p) {
    SubsetMask used = 0;
    for (auto s : p.subsets) used |= s;
    return used;
}

// `w` points at the block's center weights, or is null for unit weights.
double product_sum(const double* e, const double* w, const std::size_t* vars, std::size_t n_vars,
                   std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    if (w) {
        for (std::size_t i = lo; i < hi; ++i) {
            double prod = w[i];
            for (std::size_t v = 0; v < n_vars; ++v) prod *= e[vars[v] * kBlock + i];
            acc += prod;
        }
        return acc;
    }
    switch (n_vars) {
        case 1: {
            const double* a = e + vars[0] * kBlock;
            for (std::size_t i = lo; i < hi; ++i) acc += a[i];
            break;
        }
        case 2: {
            const double* a = e + vars[0] * kBlock;
            const double* b = e + vars[1] * kBlock;
            for (std::size_t i = lo; i < hi; ++i) acc += a[i] * b[i];
            break;
        }
        case 3: {
            const double* a = e + vars[0] * kBlock;
            const double* b = e + vars[1] * kBlock;
            const double* c = e + vars[2] * kBlock;
            for (std::size_t i = lo; i < hi; ++i) acc += a[i] * b[i] * c[i];
            break;
        }
        default:
            for (std::size_t i = lo; i < hi; ++i) {
                double prod = e[vars[0] * kBlock + i];
                for (std::size_t v = 1; v < n_vars; ++v) prod *= e[vars[v] * kBlock + i];
                acc += prod;
            }
    }
    return acc;
}

struct SubsetIndex {
    std::vector<std::size_t> vars;  // ascending
};

std::vector<SubsetIndex> expand_subsets(const KernelProblem& p) {
    std::vector<SubsetIndex> out;
    for (auto mask : p.subsets) {
        SubsetIndex s;
        for (std::size_t j = 0; j < p.dim(); ++j)
            if (mask & (SubsetMask{1} << j)) s.vars.push_back(j);
        out.push_back(std::move(s));
    }
    return out;
}

void accumulate_point(const KernelProblem& p, const std::vector<SubsetIndex>& subsets,
                      SubsetMask used, std::size_t m, Scratch& scratch, double* out_row) {
    const std::size_t n = p.n_centers();
    const std::size_t d = p.dim();
    const std::size_t n_sub = subsets.size();
    std::fill(out_row, out_row + n_sub, 0.0);

    for (std::size_t b = 0; b < n; b += kBlock) {
        const std::size_t len = std::min(kBlock, n - b);
        for (std::size_t j = 0; j < d; ++j) {
            if (!(used & (SubsetMask{1} << j))) continue;
            const double z = p.points[j][m];
            const double c = p.inv_two_h2[j];
            const double* centers = p.centers[j].data() + b;
            double* e = scratch.e.data() + j * kBlock;
            for (std::size_t i = 0; i < len; ++i) {
                const double diff = z - centers[i];
                e[i] = std::exp(-(diff * diff) * c);
            }
        }
        const bool self_here = p.exclude_self && m >= b && m < b + len;
        const std::size_t self = m - b;
        const double* w = p.weights.empty() ? nullptr : p.weights.data() + b;
        for (std::size_t s = 0; s < n_sub; ++s) {
            const auto& vars = subsets[s].vars;
            double partial;
            if (self_here) {
                partial = product_sum(scratch.e.data(), w, vars.data(), vars.size(), 0, self);
                partial += product_sum(scratch.e.data(), w, vars.data(), vars.size(), self + 1, len);
            } else {
                partial = product_sum(scratch.e.data(), w, vars.data(), vars.size(), 0, len);
            }
            out_row[s] += partial;
        }
    }
}

}  // namespace

void validate(const KernelProblem& p) {
    const std::size_t d = p.dim();
    if (d == 0) throw InvalidArgument("kernel problem has no variables");
    if (d > kMaxVariables) throw InvalidArgument("kernel problem supports at most 32 variables");
    if (p.points.size() != d)
        throw DimensionMismatch("points have " + std::to_string(p.points.size()) +
                                " variables, centers have " + std::to_string(d));
    if (p.inv_two_h2.size() != d) throw DimensionMismatch("one bandwidth factor per variable required");
    for (const auto& c : p.centers)
        if (c.size() != p.n_centers()) throw LengthMismatch("center columns differ in length");
    for (const auto& c : p.points)
        if (c.size() != p.n_points()) throw LengthMismatch("point columns differ in length");
    if (p.n_centers() == 0) throw InvalidArgument("kernel problem has no centers");
    if (p.exclude_self && p.n_centers() != p.n_points())
        throw LengthMismatch("exclude_self requires points and centers of equal length");
    if (!p.weights.empty() && p.weights.size() != p.n_centers())
        throw LengthMismatch("one weight per center required");
    for (double w : p.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("center weights must be finite and nonnegative");
    for (double c : p.inv_two_h2)
        if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("bandwidth factors must be positive");
    const SubsetMask all = d == kMaxVariables ? ~SubsetMask{0} : ((SubsetMask{1} << d) - 1);
    for (auto s : p.subsets)
        if (s == 0 || (s & ~all)) throw InvalidArgument("subset mask selects no or unknown variables");
}

std::vector<double> kernel_sums_serial(const KernelProblem& p) {
    validate(p);
    const auto subsets = expand_subsets(p);
    const auto used = used_variables(p);
    const std::size_t n_sub = subsets.size();
    std::vector<double> out(p.n_points() * n_sub);
    Scratch scratch(p);
    for (std::size_t m = 0; m < p.n_points(); ++m)
        accumulate_point(p, subsets, used, m, scratch, out.data() + m * n_sub);
    return out;
}

std::vector<double> kernel_sums(const KernelProblem& p) {
    validate(p);
    const auto subsets = expand_subsets(p);
    const auto used = used_variables(p);
    const std::size_t n_sub = subsets.size();
    const auto n_points = static_cast<std::ptrdiff_t>(p.n_points());
    std::vector<double> out(p.n_points() * n_sub);

#pragma omp parallel
    {
        Scratch scratch(p);
#pragma omp for schedule(static)
        for (std::ptrdiff_t m = 0; m < n_points; ++m) {
            const auto mu = static_cast<std::size_t>(m);
            accumulate_point(p, subsets, used, mu, scratch, out.data() + mu * n_sub);
        }
    }
    return out;
}

}  // namespace misi::kernels
