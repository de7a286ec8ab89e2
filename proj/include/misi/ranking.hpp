#pragma once

// Ranking of sensitivity indices with confidence.
//
// Comparison-adjusted intervals: the estimates are sorted, and a common
// half-width multiplier z is solved so that the average pairwise
// non-overlap significance over all pairs equals gamma_bar. Two ranked
// effects are resolved when their intervals do not overlap.
//
// Percentile intervals: N replications of all indices are ranked and the
// equal-tail percentiles of each label's ranks are reported.

#include "misi/dataset.hpp"
#include "misi/mi.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace misi {

inline constexpr double kDefaultGammaBar = 0.01;
inline constexpr double kDefaultDelta = 0.05;
inline constexpr double kDefaultNewtonTol = 1e-8;
inline constexpr int kMaxNewtonIterations = 100;

/// r_j = p - #{i : v_i < v_j}; the largest value gets rank 1 and ties share
/// the larger (worse) rank. Throws EmptyInput or InvalidArgument (non-finite).
std::vector<int> rank_values(std::span<const double> values);

struct AdjustedLevel {
    double z_level = 0.0;
    int newton_iters = 0;
};

/// Solves gamma_bar = 4/(p(p-1)) sum_{k<l} (1 - Phi(z s_kl)) with
/// s_kl = (sigma_k + sigma_l) / sqrt(sigma_k^2 + sigma_l^2) by safeguarded
/// Newton iteration from z0 = Phi^-1(1 - gamma_bar/2) sqrt(s1^2 + s2^2)/(s1 + s2).
/// `sigmas` are in ranked order. Invariant under sigma -> c sigma.
/// Throws InvalidArgument (p < 2, bad gamma_bar/tol, more than one zero
/// sigma), AllSigmasZero, NonConvergence.
AdjustedLevel adjusted_level(std::span<const double> sigmas, double gamma_bar = kDefaultGammaBar,
                             double tol = kDefaultNewtonTol);

struct PairResolution {
    std::size_t k = 0;  ///< ranked position (0-based) of the larger estimate
    std::size_t l = 0;
    bool resolved = false;
};

struct RankedReport {
    std::string qoi_label;
    int order = 1;
    std::size_t sample_count = 0;
    std::vector<std::string> ordered_labels;
    std::vector<double> theta;
    std::vector<double> sigma;
    double z_level = 0.0;
    double gamma_bar = kDefaultGammaBar;
    std::vector<std::pair<double, double>> intervals;
    int newton_iters = 0;
    /// Every k < l pair, resolved iff |theta_k - theta_l| > z (sigma_k + sigma_l).
    std::vector<PairResolution> pairs;

    bool all_resolved() const;
};

/// Sorts by value (descending, ties by label), solves the adjusted level and
/// builds theta_k +- z sigma_k. A single estimate gets the unadjusted
/// Phi^-1(1 - gamma_bar/2). Throws EmptyInput, MixedQoi, InvalidArgument
/// (mixed order or sample count), and whatever adjusted_level throws.
RankedReport ranked_report(std::span<const MisiEstimate> estimates, double gamma_bar = kDefaultGammaBar,
                           double tol = kDefaultNewtonTol);

/// The rows of one replication, with optional multiplicities (see
/// EstimatorOptions::weights).
struct Replicate {
    IoDataset data;
    std::vector<double> weights;
};

/// Supplies the io rows of one replication.
class ReplicationSource {
public:
    virtual ~ReplicationSource() = default;
    /// Must be deterministic in `seed`.
    virtual IoDataset draw(std::uint64_t seed, std::size_t rows) const = 0;
    /// The replication as the estimators see it; unit weights by default.
    virtual Replicate replicate(std::uint64_t seed, std::size_t rows) const { return {draw(seed, rows), {}}; }
};

/// Resamples a fixed corpus with replacement.
class BootstrapSource final : public ReplicationSource {
public:
    /// Throws InsufficientCorpus if the corpus has fewer than 8 rows.
    explicit BootstrapSource(IoDataset corpus);
    /// The resample with duplicated rows repeated.
    IoDataset draw(std::uint64_t seed, std::size_t rows) const override;
    /// The same resample as its distinct corpus rows (in corpus order) with
    /// their counts, so leave-one-out densities exclude every copy of a point.
    Replicate replicate(std::uint64_t seed, std::size_t rows) const override;
    const IoDataset& corpus() const noexcept { return corpus_; }

private:
    IoDataset corpus_;
};

struct PercentileOptions {
    std::size_t replications = 1000;  ///< N
    std::size_t rows = 0;             ///< M per replication
    double delta = kDefaultDelta;
    std::uint64_t base_seed = 0;
    std::string qoi;
    std::vector<std::string> cvs;
    int order = 1;  ///< 2 ranks the p(p-1)/2 pair indices
    EstimatorOptions estimator;
};

struct RankDistribution {
    std::vector<std::string> labels;
    /// replications x labels, row-major
    std::vector<int> rank_reps;
    std::vector<double> mean_rank;
    std::vector<double> lower;
    std::vector<double> upper;
    std::size_t replications = 0;
    std::size_t rows = 0;
    double delta = kDefaultDelta;
    std::uint64_t base_seed = 0;

    int rank(std::size_t replication, std::size_t label) const {
        return rank_reps[replication * labels.size() + label];
    }
};

/// Equal-tail percentile by linear interpolation between order statistics
/// (Hyndman-Fan type 7).
double percentile(std::vector<double> values, double q);

/// Replication n draws M rows with seed derive_seed(base_seed, n), computes
/// every index, ranks them, and the ranks are aggregated into means and
/// percentiles. Replications run in parallel; the result does not depend
/// on the thread count. Throws InvalidArgument (N < 1, M < 8, bad delta or
/// order), ModelFailure naming the failing replication.
RankDistribution rank_percentiles(const ReplicationSource& source, const PercentileOptions& options);

/// Index estimates for one QoI: first order (order 1) or every CV pair
/// (order 2). Indices touching a constant column are exact zeros flagged
/// `degenerate` rather than a bandwidth-selection failure.
std::vector<MisiEstimate> estimate_indices(const IoDataset& data, std::span<const std::string> cvs,
                                           const std::string& qoi, int order,
                                           const EstimatorOptions& options = {});

}  // namespace misi
