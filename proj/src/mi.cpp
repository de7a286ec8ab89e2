#include "misi/mi.hpp"

#include "misi/error.hpp"
#include "misi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace misi {

std::string_view to_string(Evaluation evaluation) {
    switch (evaluation) {
        case Evaluation::bias_corrected: return "bias_corrected";
        case Evaluation::leave_one_out: return "leave_one_out";
        case Evaluation::resubstitution: return "resubstitution";
    }
    return "unknown";
}

std::string_view to_string(IndexKind kind) {
    switch (kind) {
        case IndexKind::first_order: return "first_order";
        case IndexKind::independent_io: return "independent_io";
        case IndexKind::mutual_information: return "mutual_information";
        case IndexKind::second_order: return "second_order";
        case IndexKind::full_second_order: return "full_second_order";
    }
    return "unknown";
}

std::string MisiEstimate::label() const {
    std::string out;
    for (const auto& c : cv_labels) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

namespace {

using kernels::SubsetMask;

constexpr double kFunctionalCorrelation = 1.0 - 1e-6;

struct Term {
    SubsetMask mask;
    int sign;
};

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

struct MeanAndError {
    double mean;
    double std_error;
};

// Weighted by row multiplicity; n is the total weight.
MeanAndError summarize(std::span<const double> summands, std::span<const double> weights, double n) {
    const auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
    double total = 0.0;
    for (std::size_t b = 0; b < summands.size(); b += kernels::kBlock) {
        double partial = 0.0;
        const auto end = std::min(summands.size(), b + kernels::kBlock);
        for (std::size_t i = b; i < end; ++i) partial += weights.empty() ? summands[i] : w(i) * summands[i];
        total += partial;
    }
    const double mean = total / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < summands.size(); ++i) {
        const double dev = summands[i] - mean;
        ss += weights.empty() ? dev * dev : w(i) * dev * dev;
    }
    const double sd = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd / std::sqrt(n)};
}

std::vector<std::string> index_variables(const IndexRequest& r) {
    std::vector<std::string> vars = r.cvs;
    vars.push_back(r.qoi);
    return vars;
}

void validate_request(const IoDataset& data, const IndexRequest& r) {
    switch (r.kind) {
        case IndexKind::first_order:
            if (r.cvs.size() != 1) throw InvalidArgument("first-order index takes one CV");
            data.column(r.cvs[0], Role::cv);
            data.column(r.qoi, Role::qoi);
            break;
        case IndexKind::mutual_information:
            if (r.cvs.size() != 1) throw InvalidArgument("mutual information takes two columns");
            data.column(r.cvs[0]);
            data.column(r.qoi);
            if (r.cvs[0] == r.qoi)
                throw IdenticalCvLabels("mutual information of '" + r.qoi + "' with itself is infinite");
            break;
        case IndexKind::second_order:
        case IndexKind::full_second_order:
            if (r.cvs.size() != 2) throw InvalidArgument("pair index takes two CVs");
            if (r.cvs[0] == r.cvs[1])
                throw IdenticalCvLabels("pair index needs two distinct CVs, got '" + r.cvs[0] + "' twice");
            data.column(r.cvs[0], Role::cv);
            data.column(r.cvs[1], Role::cv);
            data.column(r.qoi, Role::qoi);
            break;
        case IndexKind::independent_io:
            throw InvalidArgument("independent_io is not a batch index; use misi_first_independent_io");
    }
}

// Signed log-density terms of one index, in canonical (mask) order so that
// argument order never changes the floating-point summation.
std::vector<Term> terms_for(const IndexRequest& r, const std::map<std::string, std::size_t>& index) {
    const auto bit = [&](const std::string& name) { return SubsetMask{1} << index.at(name); };
    std::vector<Term> terms;
    switch (r.kind) {
        case IndexKind::first_order:
        case IndexKind::mutual_information: {
            const auto a = bit(r.cvs[0]);
            const auto b = bit(r.qoi);
            terms = {{a | b, +1}, {a, -1}, {b, -1}};
            break;
        }
        case IndexKind::second_order: {
            const auto x1 = bit(r.cvs[0]);
            const auto x2 = bit(r.cvs[1]);
            const auto y = bit(r.qoi);
            terms = {{y, +1}, {x1 | x2 | y, +1}, {x1 | y, -1}, {x2 | y, -1}};
            break;
        }
        case IndexKind::full_second_order: {
            const auto x1 = bit(r.cvs[0]);
            const auto x2 = bit(r.cvs[1]);
            const auto y = bit(r.qoi);
            terms = {{x1 | x2 | y, +1}, {x1 | x2, -1}, {y, -1}};
            break;
        }
        case IndexKind::independent_io: break;
    }
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.mask < b.mask; });
    return terms;
}

int order_of(IndexKind kind) {
    return kind == IndexKind::second_order || kind == IndexKind::full_second_order ? 2 : 1;
}

bool near_functional(const IoDataset& data, const std::vector<std::string>& vars) {
    for (std::size_t i = 0; i < vars.size(); ++i)
        for (std::size_t j = i + 1; j < vars.size(); ++j)
            if (std::abs(pearson(data.column(vars[i]).values(), data.column(vars[j]).values())) >=
                kFunctionalCorrelation)
                return true;
    return false;
}

BandwidthSet complete_bandwidths(const IoDataset& data, const std::vector<std::string>& vars,
                                 const std::optional<BandwidthSet>& given) {
    if (given) {
        for (const auto& v : vars) given->at(v);
        return *given;
    }
    return select_bandwidths(data, vars);
}

}  // namespace

std::vector<MisiEstimate> estimate_batch(const IoDataset& data, std::span<const IndexRequest> requests,
                                         const std::optional<BandwidthSet>& bandwidths,
                                         const EstimatorOptions& options) {
    if (requests.empty()) return {};
    for (const auto& r : requests) validate_request(data, r);

    // Canonical variable order: lexicographic by name.
    std::vector<std::string> vars;
    for (const auto& r : requests)
        for (auto& v : index_variables(r)) vars.push_back(std::move(v));
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    if (vars.size() > kernels::kMaxVariables)
        throw InvalidArgument("a batch may reference at most 32 variables");
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < vars.size(); ++j) index[vars[j]] = j;

    const BandwidthSet bw = complete_bandwidths(data, vars, bandwidths);

    std::vector<std::vector<Term>> request_terms;
    std::vector<SubsetMask> subsets;
    for (const auto& r : requests) {
        request_terms.push_back(terms_for(r, index));
        for (const auto& t : request_terms.back()) subsets.push_back(t.mask);
    }
    std::sort(subsets.begin(), subsets.end());
    subsets.erase(std::unique(subsets.begin(), subsets.end()), subsets.end());

    const bool loo = options.evaluation != Evaluation::resubstitution;
    const bool corrected = options.evaluation == Evaluation::bias_corrected;
    const std::size_t m = data.rows();
    if (loo && m < 3) throw InvalidArgument("leave-one-out estimation needs at least 3 observations");
    const auto& weights = options.weights;
    double total_weight = static_cast<double>(m);
    if (!weights.empty()) {
        if (weights.size() != m) throw LengthMismatch("one weight per row required");
        total_weight = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("row weights must be finite and nonnegative");
            total_weight += w;
        }
        for (double w : weights)
            if (!(total_weight - w > 0.0)) throw InvalidArgument("weights must spread over at least two rows");
    }

    kernels::KernelProblem problem;
    std::vector<double> h(vars.size());
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const auto col = data.column(vars[j]).values();
        problem.centers.push_back(col);
        problem.points.push_back(col);
        h[j] = bw.at(vars[j]);
        problem.inv_two_h2.push_back(1.0 / (2.0 * h[j] * h[j]));
    }
    problem.subsets = subsets;
    problem.exclude_self = loo;
    problem.weights = weights;
    const auto sums = kernels::kernel_sums(problem);

    // log densities, subset-major, with clamp flags; leave-one-out drops
    // every copy of the evaluation point
    const auto n_eff = [&](std::size_t i) {
        if (weights.empty()) return static_cast<double>(loo ? m - 1 : m);
        return loo ? total_weight - weights[i] : total_weight;
    };
    const std::size_t n_sub = subsets.size();
    std::vector<std::vector<double>> log_density(n_sub, std::vector<double>(m));
    std::vector<bool> clamped(n_sub, false);
    for (std::size_t s = 0; s < n_sub; ++s) {
        double prod_h = 1.0;
        int d = 0;
        for (std::size_t j = 0; j < vars.size(); ++j)
            if (subsets[s] & (SubsetMask{1} << j)) {
                prod_h *= h[j];
                ++d;
            }
        const double c_norm = std::pow(2.0 * std::numbers::pi, -0.5 * d);
        const double c_shift = corrected ? std::pow(4.0 * std::numbers::pi, -0.5 * d) : 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double n = n_eff(i);
            const double norm = c_norm / (n * prod_h);
            const double shift = c_shift / (2.0 * n * prod_h);
            double f = norm * sums[i * n_sub + s] + shift;
            if (!(f >= kDensityFloor)) {
                f = kDensityFloor;
                clamped[s] = true;
            }
            log_density[s][i] = std::log(f);
        }
    }
    const auto subset_index = [&](SubsetMask mask) {
        return static_cast<std::size_t>(std::lower_bound(subsets.begin(), subsets.end(), mask) -
                                        subsets.begin());
    };

    std::vector<MisiEstimate> out;
    out.reserve(requests.size());
    std::vector<double> summands(m);
    for (std::size_t q = 0; q < requests.size(); ++q) {
        const auto& r = requests[q];
        const auto& terms = request_terms[q];
        std::vector<std::size_t> idx;
        bool any_clamped = false;
        for (const auto& t : terms) {
            idx.push_back(subset_index(t.mask));
            any_clamped = any_clamped || clamped[idx.back()];
        }
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < terms.size(); ++k)
                acc += terms[k].sign > 0 ? log_density[idx[k]][i] : -log_density[idx[k]][i];
            summands[i] = acc;
        }
        const auto stats = summarize(summands, weights, total_weight);

        MisiEstimate e;
        e.kind = r.kind;
        e.value = stats.mean;
        e.std_error = stats.std_error;
        e.sample_count = static_cast<std::size_t>(std::llround(total_weight));
        e.order = order_of(r.kind);
        e.cv_labels = r.cvs;
        e.qoi_label = r.qoi;
        const auto own = index_variables(r);
        for (const auto& v : own) e.bandwidths_used.set(v, bw.at(v));
        e.underflow_clamped = any_clamped;
        e.near_functional = near_functional(data, own);
        out.push_back(std::move(e));
    }
    return out;
}

MisiEstimate misi_first(const IoDataset& data, const std::string& cv, const std::string& qoi,
                        const std::optional<BandwidthSet>& bandwidths, const EstimatorOptions& options) {
    const IndexRequest r{IndexKind::first_order, {cv}, qoi};
    return estimate_batch(data, std::span(&r, 1), bandwidths, options).front();
}

std::vector<MisiEstimate> misi_first_all(const IoDataset& data, std::span<const std::string> cvs,
                                         const std::string& qoi,
                                         const std::optional<BandwidthSet>& bandwidths,
                                         const EstimatorOptions& options) {
    std::vector<IndexRequest> requests;
    for (const auto& c : cvs) requests.push_back({IndexKind::first_order, {c}, qoi});
    return estimate_batch(data, requests, bandwidths, options);
}

MisiEstimate mi_pair(const IoDataset& data, const std::string& a, const std::string& b,
                     const std::optional<BandwidthSet>& bandwidths, const EstimatorOptions& options) {
    const IndexRequest r{IndexKind::mutual_information, {a}, b};
    return estimate_batch(data, std::span(&r, 1), bandwidths, options).front();
}

MisiEstimate misi_second(const IoDataset& data, const std::string& cv1, const std::string& cv2,
                         const std::string& qoi, const std::optional<BandwidthSet>& bandwidths,
                         const EstimatorOptions& options) {
    const IndexRequest r{IndexKind::second_order, {cv1, cv2}, qoi};
    return estimate_batch(data, std::span(&r, 1), bandwidths, options).front();
}

std::vector<MisiEstimate> misi_second_all(const IoDataset& data, std::span<const std::string> cvs,
                                          const std::string& qoi,
                                          const std::optional<BandwidthSet>& bandwidths,
                                          const EstimatorOptions& options) {
    std::vector<IndexRequest> requests;
    for (std::size_t i = 0; i < cvs.size(); ++i)
        for (std::size_t j = i + 1; j < cvs.size(); ++j)
            requests.push_back({IndexKind::second_order, {cvs[i], cvs[j]}, qoi});
    return estimate_batch(data, requests, bandwidths, options);
}

MisiEstimate full_second_order(const IoDataset& data, const std::string& cv1, const std::string& cv2,
                               const std::string& qoi, const std::optional<BandwidthSet>& bandwidths,
                               const EstimatorOptions& options) {
    const IndexRequest r{IndexKind::full_second_order, {cv1, cv2}, qoi};
    return estimate_batch(data, std::span(&r, 1), bandwidths, options).front();
}

MisiEstimate misi_first_independent_io(const SampleColumn& x_samples, const SampleColumn& y_samples,
                                       const IoDataset& joint,
                                       const std::optional<BandwidthSet>& bandwidths) {
    const auto& x = joint.column(x_samples.name(), Role::cv);
    const auto& y = joint.column(y_samples.name(), Role::qoi);
    if (x_samples.size() != y_samples.size())
        throw LengthMismatch("independent x and y draws must have equal length (" +
                             std::to_string(x_samples.size()) + " vs " +
                             std::to_string(y_samples.size()) + ")");
    const std::vector<std::string> vars = {x.name(), y.name()};
    const BandwidthSet bw = complete_bandwidths(joint, vars, bandwidths);
    const double hx = bw.at(x.name());
    const double hy = bw.at(y.name());

    kernels::KernelProblem problem;
    problem.centers = {x.values(), y.values()};
    problem.points = {x_samples.values(), y_samples.values()};
    problem.inv_two_h2 = {1.0 / (2.0 * hx * hx), 1.0 / (2.0 * hy * hy)};
    problem.subsets = {0b01, 0b10, 0b11};
    const auto sums = kernels::kernel_sums(problem);

    const double n = static_cast<double>(joint.rows());
    const double norm_x = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * n * hx);
    const double norm_y = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * n * hy);
    const double norm_xy = 1.0 / (2.0 * std::numbers::pi * n * hx * hy);

    const std::size_t m = x_samples.size();
    std::vector<double> summands(m);
    bool clamped = false;
    const auto floor = [&](double f) {
        if (!(f >= kDensityFloor)) {
            clamped = true;
            return kDensityFloor;
        }
        return f;
    };
    for (std::size_t i = 0; i < m; ++i) {
        const double fx = floor(norm_x * sums[3 * i]);
        const double fy = floor(norm_y * sums[3 * i + 1]);
        const double fxy = floor(norm_xy * sums[3 * i + 2]);
        const double log_ratio = std::log(fxy) - std::log(fx) - std::log(fy);
        summands[i] = log_ratio * std::exp(log_ratio);
    }
    const auto stats = summarize(summands, {}, static_cast<double>(m));

    MisiEstimate e;
    e.kind = IndexKind::independent_io;
    e.value = stats.mean;
    e.std_error = stats.std_error;
    e.sample_count = m;
    e.order = 1;
    e.cv_labels = {x.name()};
    e.qoi_label = y.name();
    e.bandwidths_used.set(x.name(), hx);
    e.bandwidths_used.set(y.name(), hy);
    e.underflow_clamped = clamped;
    e.near_functional = near_functional(joint, vars);
    return e;
}

}  // namespace misi
