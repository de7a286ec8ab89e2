#include "misi/ranking.hpp"

#include "misi/error.hpp"
#include "misi/normal.hpp"
#include "misi/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>

namespace misi {

std::vector<int> rank_values(std::span<const double> values) {
    if (values.empty()) throw EmptyInput("rank_values needs at least one value");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("rank_values needs finite values");
    const int p = static_cast<int>(values.size());
    std::vector<int> ranks(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        int below = 0;
        for (double v : values)
            if (v < values[j]) ++below;
        ranks[j] = p - below;
    }
    return ranks;
}

AdjustedLevel adjusted_level(std::span<const double> sigmas, double gamma_bar, double tol) {
    const std::size_t p = sigmas.size();
    if (p < 2) throw InvalidArgument("adjusted_level needs at least two standard errors");
    if (!(gamma_bar > 0.0 && gamma_bar < 1.0)) throw InvalidArgument("gamma_bar must lie in (0, 1)");
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    double max_sigma = 0.0;
    std::size_t zeros = 0;
    for (double s : sigmas) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw InvalidArgument("standard errors must be finite and nonnegative");
        if (s == 0.0) ++zeros;
        max_sigma = std::max(max_sigma, s);
    }
    if (zeros == p) throw AllSigmasZero("every standard error is zero; the level is undefined");
    if (zeros > 1) throw InvalidArgument("at most one standard error may be zero");

    // s_kl is homogeneous of degree 0; normalizing first makes the solve
    // independent of the overall scale.
    std::vector<double> s(p);
    for (std::size_t k = 0; k < p; ++k) s[k] = sigmas[k] / max_sigma;

    std::vector<double> skl;
    skl.reserve(p * (p - 1) / 2);
    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t l = k + 1; l < p; ++l)
            skl.push_back((s[k] + s[l]) / std::sqrt(s[k] * s[k] + s[l] * s[l]));

    const double c = 4.0 / (static_cast<double>(p) * static_cast<double>(p - 1));
    const auto f = [&](double z) {
        double acc = 0.0;
        for (double v : skl) acc += normal::upper_tail(z * v);
        return gamma_bar - c * acc;
    };
    const auto df = [&](double z) {
        double acc = 0.0;
        for (double v : skl) acc += normal::pdf(z * v) * v;
        return c * acc;
    };

    double z = normal::quantile(1.0 - gamma_bar / 2.0) * std::sqrt(s[0] * s[0] + s[1] * s[1]) /
               (s[0] + s[1]);
    double lo = 1e-6;
    double hi = 10.0;
    for (int i = 1; i <= kMaxNewtonIterations; ++i) {
        const double fz = f(z);
        if (fz < 0.0)
            lo = std::max(lo, z);
        else
            hi = std::min(hi, z);
        double next = z - fz / df(z);
        if (!(next > 0.0) || !std::isfinite(next) || next < lo || next > hi) next = 0.5 * (lo + hi);
        const double err = std::abs(next - z) / z;
        z = next;
        if (err < tol) return {z, i};
    }
    throw NonConvergence("adjusted level did not converge in " + std::to_string(kMaxNewtonIterations) +
                         " Newton iterations");
}

bool RankedReport::all_resolved() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const PairResolution& r) { return r.resolved; });
}

RankedReport ranked_report(std::span<const MisiEstimate> estimates, double gamma_bar, double tol) {
    if (estimates.empty()) throw EmptyInput("ranked_report needs at least one estimate");
    const auto& first = estimates.front();
    for (const auto& e : estimates) {
        if (e.qoi_label != first.qoi_label)
            throw MixedQoi("estimates target '" + first.qoi_label + "' and '" + e.qoi_label + "'");
        if (e.order != first.order) throw InvalidArgument("estimates mix first- and second-order indices");
        if (e.sample_count != first.sample_count)
            throw InvalidArgument("estimates were computed from different sample counts");
    }

    std::vector<std::size_t> order(estimates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (estimates[a].value != estimates[b].value) return estimates[a].value > estimates[b].value;
        return estimates[a].label() < estimates[b].label();
    });

    RankedReport r;
    r.qoi_label = first.qoi_label;
    r.order = first.order;
    r.sample_count = first.sample_count;
    r.gamma_bar = gamma_bar;
    for (auto i : order) {
        r.ordered_labels.push_back(estimates[i].label());
        r.theta.push_back(estimates[i].value);
        r.sigma.push_back(estimates[i].std_error);
    }
    if (r.theta.size() == 1) {
        if (!(gamma_bar > 0.0 && gamma_bar < 1.0)) throw InvalidArgument("gamma_bar must lie in (0, 1)");
        r.z_level = normal::quantile(1.0 - gamma_bar / 2.0);
        r.newton_iters = 0;
    } else {
        const auto level = adjusted_level(r.sigma, gamma_bar, tol);
        r.z_level = level.z_level;
        r.newton_iters = level.newton_iters;
    }
    for (std::size_t k = 0; k < r.theta.size(); ++k)
        r.intervals.emplace_back(r.theta[k] - r.z_level * r.sigma[k], r.theta[k] + r.z_level * r.sigma[k]);
    for (std::size_t k = 0; k < r.theta.size(); ++k)
        for (std::size_t l = k + 1; l < r.theta.size(); ++l)
            r.pairs.push_back({k, l,
                               std::abs(r.theta[k] - r.theta[l]) > r.z_level * (r.sigma[k] + r.sigma[l])});
    return r;
}

BootstrapSource::BootstrapSource(IoDataset corpus) : corpus_(std::move(corpus)) {
    if (corpus_.rows() < 8)
        throw InsufficientCorpus("bootstrap corpus needs at least 8 rows, got " +
                                 std::to_string(corpus_.rows()));
}

namespace {

std::vector<std::size_t> resample_indices(std::size_t corpus_rows, std::uint64_t seed, std::size_t rows) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, corpus_rows - 1);
    std::vector<std::size_t> idx(rows);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

}  // namespace

IoDataset BootstrapSource::draw(std::uint64_t seed, std::size_t rows) const {
    return corpus_.select_rows(resample_indices(corpus_.rows(), seed, rows));
}

Replicate BootstrapSource::replicate(std::uint64_t seed, std::size_t rows) const {
    std::vector<double> counts(corpus_.rows(), 0.0);
    for (auto i : resample_indices(corpus_.rows(), seed, rows)) counts[i] += 1.0;
    Replicate out;
    std::vector<std::size_t> distinct;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] > 0.0) {
            distinct.push_back(i);
            out.weights.push_back(counts[i]);
        }
    out.data = corpus_.select_rows(distinct);
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyInput("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

std::vector<MisiEstimate> estimate_indices(const IoDataset& data, std::span<const std::string> cvs,
                                           const std::string& qoi, int order,
                                           const EstimatorOptions& options) {
    if (order != 1 && order != 2) throw InvalidArgument("order must be 1 or 2");
    const auto is_constant = [&](const std::string& name) {
        const auto v = data.column(name).values();
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    std::vector<IndexRequest> requests;
    if (order == 1) {
        for (const auto& c : cvs) requests.push_back({IndexKind::first_order, {c}, qoi});
    } else {
        for (std::size_t i = 0; i < cvs.size(); ++i)
            for (std::size_t j = i + 1; j < cvs.size(); ++j)
                requests.push_back({IndexKind::second_order, {cvs[i], cvs[j]}, qoi});
    }

    std::vector<IndexRequest> live;
    std::vector<std::optional<MisiEstimate>> slots(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& r = requests[i];
        data.column(r.qoi, Role::qoi);
        bool degenerate = is_constant(r.qoi);
        for (const auto& c : r.cvs) {
            data.column(c, Role::cv);
            degenerate = degenerate || is_constant(c);
        }
        if (degenerate) {
            MisiEstimate e;
            e.kind = r.kind;
            e.order = order;
            e.sample_count = options.weights.empty()
                                 ? data.rows()
                                 : static_cast<std::size_t>(std::llround(
                                       std::accumulate(options.weights.begin(), options.weights.end(), 0.0)));
            e.cv_labels = r.cvs;
            e.qoi_label = r.qoi;
            e.degenerate = true;
            slots[i] = std::move(e);
        } else {
            live.push_back(r);
        }
    }
    auto computed = estimate_batch(data, live, std::nullopt, options);
    std::vector<MisiEstimate> out;
    std::size_t next = 0;
    for (auto& s : slots) out.push_back(s ? std::move(*s) : std::move(computed[next++]));
    return out;
}

RankDistribution rank_percentiles(const ReplicationSource& source, const PercentileOptions& options) {
    if (options.replications < 1) throw InvalidArgument("at least one replication is required");
    if (options.rows < 8) throw InvalidArgument("each replication needs at least 8 observations");
    if (!(options.delta > 0.0 && options.delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    if (options.order != 1 && options.order != 2) throw InvalidArgument("order must be 1 or 2");
    if (options.cvs.empty()) throw EmptyInput("no CVs to rank");
    if (options.order == 2 && options.cvs.size() < 2) throw InvalidArgument("pair ranking needs two CVs");

    RankDistribution out;
    if (options.order == 1) {
        out.labels = options.cvs;
    } else {
        for (std::size_t i = 0; i < options.cvs.size(); ++i)
            for (std::size_t j = i + 1; j < options.cvs.size(); ++j)
                out.labels.push_back(options.cvs[i] + "," + options.cvs[j]);
    }
    const std::size_t p = out.labels.size();
    const std::size_t n_rep = options.replications;
    out.rank_reps.assign(n_rep * p, 0);
    out.replications = n_rep;
    out.rows = options.rows;
    out.delta = options.delta;
    out.base_seed = options.base_seed;

    std::vector<std::exception_ptr> errors(n_rep);
    const auto n_signed = static_cast<std::ptrdiff_t>(n_rep);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t ns = 0; ns < n_signed; ++ns) {
        const auto n = static_cast<std::size_t>(ns);
        try {
            auto rep = source.replicate(derive_seed(options.base_seed, std::uint64_t{n}), options.rows);
            auto eopt = options.estimator;
            eopt.weights = std::move(rep.weights);
            const auto est = estimate_indices(rep.data, options.cvs, options.qoi, options.order, eopt);
            std::vector<double> values;
            for (const auto& e : est) values.push_back(e.value);
            const auto ranks = rank_values(values);
            std::copy(ranks.begin(), ranks.end(), out.rank_reps.begin() + static_cast<std::ptrdiff_t>(n * p));
        } catch (const ModelFailure& e) {
            errors[n] = std::make_exception_ptr(
                ModelFailure("replication " + std::to_string(n) + ": " + e.what()));
        } catch (...) {
            errors[n] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> col(n_rep);
        double total = 0.0;
        for (std::size_t n = 0; n < n_rep; ++n) {
            col[n] = out.rank(n, j);
            total += col[n];
        }
        out.mean_rank.push_back(total / static_cast<double>(n_rep));
        out.lower.push_back(percentile(col, options.delta / 2.0));
        out.upper.push_back(percentile(col, 1.0 - options.delta / 2.0));
    }
    return out;
}

}  // namespace misi
