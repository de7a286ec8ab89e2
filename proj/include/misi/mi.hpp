#pragma once

// Plug-in Monte Carlo estimators of differential mutual information built on
// Gaussian product-kernel density estimates.
//
// Every index is an average over the M observations of a signed sum of log
// densities of variable subsets, e.g. the first-order index uses
//
//     log f(x, y) - log f(x) - log f(y).
//
// A batch of indices over one dataset shares a single kernel pass; densities
// of a subset are computed once no matter how many indices use it. Every
// variable carries one bandwidth in every joint and marginal density.
//
// All values are in nats.

#include "misi/dataset.hpp"
#include "misi/density.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace misi {

enum class IndexKind {
    first_order,         ///< I(X; Y), X a CV and Y a QoI
    independent_io,      ///< I(X; Y) by change of measure over independent draws
    mutual_information,  ///< I(A; B) between any two columns
    second_order,        ///< I(X1; X2 | Y)
    full_second_order,   ///< I(X1, X2; Y)
};

std::string_view to_string(IndexKind kind);

/// How densities are evaluated at the sample points that built them.
enum class Evaluation {
    /// Leave-one-out densities plus the first-order correction of the log's
    /// Jensen bias: log(f_-m + (4 pi)^(-d/2) / (2 (M-1) prod h)). The constant
    /// is half the kernel-variance factor Var f/f at f = 1; it scales like a
    /// density, so affine invariance and the chain-rule identity still hold.
    bias_corrected,
    /// Each observation is left out of the estimate evaluated at itself. Removes
    /// the self-kernel bias, which grows with dimension (about +0.1 nats for
    /// the three-variable densities of the second-order index at M = 5e3), but
    /// leaves the negative bias of the log (about -0.06 there).
    leave_one_out,
    /// The density estimate of all M observations, self-term included.
    resubstitution,
};

std::string_view to_string(Evaluation evaluation);

struct EstimatorOptions {
    Evaluation evaluation = Evaluation::bias_corrected;
    /// Optional multiplicity per row, e.g. bootstrap counts over the distinct
    /// rows of a resample. A weighted dataset stands for the sample in which
    /// row i occurs weights[i] times, except that leave-one-out evaluation
    /// drops every copy of the point, so duplicates never inflate their own
    /// density. Empty means unit weights.
    std::vector<double> weights;
};

/// Densities below this are clamped before taking logs.
inline constexpr double kDensityFloor = 1e-300;

struct MisiEstimate {
    IndexKind kind = IndexKind::first_order;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t sample_count = 0;
    int order = 1;
    std::vector<std::string> cv_labels;
    std::string qoi_label;
    BandwidthSet bandwidths_used;
    /// Some density fell below kDensityFloor and was clamped.
    bool underflow_clamped = false;
    /// Two variables of the index are (almost) perfectly correlated; the true
    /// mutual information may be infinite and the value is resolution-bound.
    bool near_functional = false;
    /// Set by callers that substitute an exact zero for a constant column.
    bool degenerate = false;

    /// "x1" for first order, "x1,x2" for pair indices.
    std::string label() const;
};

struct IndexRequest {
    IndexKind kind = IndexKind::first_order;
    std::vector<std::string> cvs;
    std::string qoi;
};

/// Evaluates a batch of first-order, mutual-information, second-order and
/// full second-order requests in one kernel pass. Bandwidths missing from
/// `bandwidths` (or all of them, if omitted) are selected by ISJ on the
/// marginal samples. Results are bit-identical to evaluating each request
/// alone.
std::vector<MisiEstimate> estimate_batch(const IoDataset& data, std::span<const IndexRequest> requests,
                                         const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                                         const EstimatorOptions& options = {});

MisiEstimate misi_first(const IoDataset& data, const std::string& cv, const std::string& qoi,
                        const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                        const EstimatorOptions& options = {});

/// First-order indices of every listed CV against one QoI.
std::vector<MisiEstimate> misi_first_all(const IoDataset& data, std::span<const std::string> cvs,
                                         const std::string& qoi,
                                         const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                                         const EstimatorOptions& options = {});

/// Change-of-measure estimator averaging R log R with R the joint-to-product
/// density ratio. The densities are fitted on `joint` (columns named like
/// `x_samples` and `y_samples`, roles CV and QoI) and evaluated at the
/// points (x_samples[m], y_samples[m]), which must be independent draws from
/// the two marginals.
MisiEstimate misi_first_independent_io(const SampleColumn& x_samples, const SampleColumn& y_samples,
                                       const IoDataset& joint,
                                       const std::optional<BandwidthSet>& bandwidths = std::nullopt);

/// I(a; b) without role restrictions; symmetric bit-for-bit.
MisiEstimate mi_pair(const IoDataset& data, const std::string& a, const std::string& b,
                     const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                     const EstimatorOptions& options = {});

/// I(cv1; cv2 | qoi); symmetric in cv1, cv2 bit-for-bit.
MisiEstimate misi_second(const IoDataset& data, const std::string& cv1, const std::string& cv2,
                         const std::string& qoi,
                         const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                         const EstimatorOptions& options = {});

/// Second-order indices of every unordered pair of the listed CVs, in
/// (i < j) order.
std::vector<MisiEstimate> misi_second_all(const IoDataset& data, std::span<const std::string> cvs,
                                          const std::string& qoi,
                                          const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                                          const EstimatorOptions& options = {});

/// I(cv1, cv2; qoi).
MisiEstimate full_second_order(const IoDataset& data, const std::string& cv1, const std::string& cv2,
                               const std::string& qoi,
                               const std::optional<BandwidthSet>& bandwidths = std::nullopt,
                               const EstimatorOptions& options = {});

}  // namespace misi
