#pragma once

// Gaussian product-kernel sums, the hot loop behind every density and MI
// estimate. Two implementations share one contract:
//
//   kernel_sums_serial   single-threaded reference, kept for tests and the
//                        benchmark baseline
//   kernel_sums          OpenMP map over evaluation points
//
// For evaluation point m and variable subset S the kernels compute
//
//   out[m, s] = sum_k w_k prod_{j in S} exp(-(z_mj - Z_kj)^2 * inv_two_h2[j])
//
// with w_k = 1 unless center weights are given,
// and k running over all centers (or all centers except k == m when
// `exclude_self` is set). Each point's sum is accumulated over fixed-size
// blocks of centers in index order, so both implementations return
// bit-identical results for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace misi::kernels {

/// Centers per partial sum; part of the summation-order contract.
inline constexpr std::size_t kBlock = 256;

/// Subsets are bit masks over the variable index (bit j selects variable j).
using SubsetMask = std::uint32_t;
inline constexpr std::size_t kMaxVariables = 32;

struct KernelProblem {
    /// One span per variable, each holding n_centers values.
    std::vector<std::span<const double>> centers;
    /// One span per variable, each holding n_points values.
    std::vector<std::span<const double>> points;
    /// 1 / (2 h_j^2) per variable.
    std::vector<double> inv_two_h2;
    std::vector<SubsetMask> subsets;
    /// Skip the center with the same index as the evaluation point. Requires
    /// points and centers to describe the same rows.
    bool exclude_self = false;
    /// Optional nonnegative weight per center; empty means all ones.
    std::span<const double> weights;

    std::size_t dim() const { return centers.size(); }
    std::size_t n_centers() const { return centers.empty() ? 0 : centers.front().size(); }
    std::size_t n_points() const { return points.empty() ? 0 : points.front().size(); }
};

/// Throws InvalidArgument/DimensionMismatch/LengthMismatch on malformed input.
void validate(const KernelProblem& problem);

/// Output is row-major n_points x n_subsets.
std::vector<double> kernel_sums_serial(const KernelProblem& problem);
std::vector<double> kernel_sums(const KernelProblem& problem);

}  // namespace misi::kernels
