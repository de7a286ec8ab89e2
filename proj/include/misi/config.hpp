#pragma once

// Run configuration, read from TOML or (by .json extension) JSON.
//
//   [model]     kind = "builtin" | "external" | "dataset" | "none" (prior only)
//               builtin: name, coefficients, noise, a, b, value, inputs,
//                        region_coefficients, region = [lo, hi]
//               external: command, inputs, outputs, timeout_s
//               dataset: path
//               assemble = "deff" turns deff_plus/deff_minus into keff/t_plus
//   [prior]     kind = "edlc" | "builtin" | "generic"
//               edlc: T, cin, r, omega = [min, max], emit = [...],
//                     constants_file, [prior.constants] overrides
//               generic: [[prior.variables]] name, kind, mean/sd or min/max
//   [roles]     cv = [...], qoi = [...]
//   [analysis]  order, samples, gamma_bar, delta, replications, base_seed,
//               algorithm = "adjusted" | "percentile",
//               mode = "fresh" | "bootstrap", evaluation
//   [subspace]  name = [lo, hi] per independently drawn CV
//   [sample]    count
//   [curve]     cv, qoi, bins, samples
//   [loop]      target, top_k
//   [output]    path, table

#include "misi/mi.hpp"
#include "misi/models.hpp"
#include "misi/priors.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace misi {

enum class Algorithm { adjusted, percentile };
enum class ReplicationMode { fresh, bootstrap };

struct ModelConfig {
    enum class Kind { builtin, external, dataset, none };
    Kind kind = Kind::builtin;
    std::string builtin = "linear_gaussian";
    BuiltinParams params = BuiltinParams::defaults("linear_gaussian");
    ExternalModelConfig external;
    std::string dataset_path;
    bool assemble_deff = false;
};

struct AnalysisConfig {
    int order = 1;
    std::size_t samples = 10'000;
    double gamma_bar = 0.01;
    double delta = 0.05;
    std::size_t replications = 1'000;
    std::uint64_t base_seed = 0;
    Algorithm algorithm = Algorithm::adjusted;
    ReplicationMode mode = ReplicationMode::fresh;
    Evaluation evaluation = Evaluation::bias_corrected;
};

struct CurveConfig {
    std::string cv;
    std::string qoi;
    std::size_t bins = 10;
    std::size_t samples = 1'000;
};

struct LoopConfig {
    std::string target;
    std::size_t top_k = 0;  ///< 0 keeps every CV in the inner ranking
};

struct RunConfig {
    ModelConfig model;
    /// Absent in dataset mode.
    std::optional<Prior> prior;
    std::vector<std::string> cvs;
    std::vector<std::string> qois;
    AnalysisConfig analysis;
    Subspace subspace;
    std::size_t sample_count = 1'000;
    CurveConfig curve;
    LoopConfig loop;
    std::string output_path;
    bool output_table = false;
    /// Directory of the config file; relative paths resolve against it.
    std::string base_dir;

    /// Prior narrowed to [subspace]. Throws ConfigError in dataset mode.
    Prior effective_prior() const;
    /// Throws ConfigError in dataset mode.
    ModelHandle make_model() const;
};

/// Parses and validates. Every error, including unknown keys and a
/// subspace outside the prior, is a ConfigError raised before any model is
/// queried. Throws IoError if the file cannot be read.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, bool json, const std::string& base_dir = ".");

PhysicalConstants load_constants_file(const std::string& path);

}  // namespace misi
