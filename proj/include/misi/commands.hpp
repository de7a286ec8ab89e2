#pragma once

// The four CLI workflows. Each returns the complete output document; the
// caller decides where it goes. Outputs contain no timestamps and are
// byte-identical for a fixed config and seed, whatever the thread count.

#include "misi/config.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace misi {

struct CommandOptions {
    /// Overrides analysis.base_seed.
    std::optional<std::uint64_t> seed;
    /// Override curve.cv, curve.qoi and curve.bins.
    std::string curve_cv;
    std::string curve_qoi;
    std::optional<std::size_t> curve_bins;
};

inline constexpr int kReportVersion = 1;

/// CSV of sample.count prior draws (plus model outputs).
std::string cmd_sample(const RunConfig& config, const CommandOptions& options = {});

/// JSON ranking report, one result per QoI.
std::string cmd_rank(const RunConfig& config, const CommandOptions& options = {});

/// CSV with a `kind` column: one `point` row per observation (x, y) sorted
/// by x, then one `bin` row per bin (center, mean, count); empty bins have
/// an empty mean.
std::string cmd_curve(const RunConfig& config, const CommandOptions& options = {});

/// JSON with the ranking over the full prior (outer) and inside [subspace]
/// (inner) for loop.target, plus per-label rank changes.
std::string cmd_loop(const RunConfig& config, const CommandOptions& options = {});

/// Plain-text table of a rank or loop report.
std::string report_table(const std::string& json_report);

}  // namespace misi
