#pragma once

// Black-box models Y = M(X): analytic builtins and an adapter that pipes CSV
// batches through an external process.

#include "misi/dataset.hpp"
#include "misi/priors.hpp"
#include "misi/ranking.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace misi {

class Model {
public:
    virtual ~Model() = default;

    const std::vector<std::string>& input_labels() const noexcept { return inputs_; }
    const std::vector<std::string>& output_labels() const noexcept { return outputs_; }

    /// Maps the CV columns named by input_labels() to QoI columns named by
    /// output_labels(), row for row. Deterministic in `seed`. Throws
    /// UnknownColumn, ModelFailure.
    virtual IoDataset query(const IoDataset& inputs, std::uint64_t seed) const = 0;

protected:
    /// Throws InvalidArgument unless labels are nonempty, unique and the two
    /// lists are disjoint.
    Model(std::vector<std::string> inputs, std::vector<std::string> outputs);

private:
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

using ModelHandle = std::shared_ptr<const Model>;

/// Parameters of the builtin models; each model reads the fields it needs.
///   linear_gaussian:  Y = sum a_i X_i + sigma eps
///   ishigami:         Y = sin X1 + a sin^2 X2 + b X3^4 sin X1
///   product_gaussian: Y = X1 X2 + sum a_i X_i + sigma eps
///   constant:         Y = value, with `inputs` CVs
///   regional_linear:  Y = sum a_i X_i + sigma eps, where a switches to
///                     `region_coefficients` while X1 lies in [region_lo, region_hi]
struct BuiltinParams {
    std::vector<double> coefficients;
    std::vector<double> region_coefficients;
    double noise = 1.0;
    double a = 7.0;
    double b = 0.1;
    double value = 1.0;
    std::size_t inputs = 3;
    double region_lo = 0.75;
    double region_hi = 1.0;

    /// Defaults of each builtin: linear_gaussian (4, 2, 1) with sigma 1;
    /// product_gaussian (0, 0, 0.1) with sigma 1; regional_linear (4, 1)
    /// switching to (0.5, 4) with sigma 0.1.
    static BuiltinParams defaults(const std::string& name);
};

inline const std::vector<std::string> kBuiltinNames = {"linear_gaussian", "ishigami", "product_gaussian",
                                                       "constant", "regional_linear"};

/// Inputs are x1..xp, the output is y. Throws UnknownBuiltin, InvalidArgument.
ModelHandle builtin_model(const std::string& name, const BuiltinParams& params);
inline ModelHandle builtin_model(const std::string& name) {
    return builtin_model(name, BuiltinParams::defaults(name));
}

/// Prior the builtin is meant to be driven by: standard normal inputs,
/// except uniform on [-pi, pi] for ishigami and on [0, 1] for regional_linear.
Prior builtin_prior(const std::string& name, const BuiltinParams& params);

struct ExternalModelConfig {
    /// Run through /bin/sh -c.
    std::string command;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::milliseconds timeout{300'000};
};

/// Each query writes one CSV batch (header plus one row per sample) to the
/// child's stdin and reads a CSV with the output labels and the same row
/// count from its stdout. The child sees MISI_MODEL_SEED. Queries through
/// one handle are serialized; a failed query is never retried.
ModelHandle external_model(const ExternalModelConfig& config);

/// Wraps a model emitting effective diffusivities `deff_plus` and
/// `deff_minus` (m^2/s) and returns keff (mS/cm) and t_plus instead. The
/// wrapped model must take T and cin among its inputs.
ModelHandle deff_assembly(ModelHandle inner, PhysicalConstants constants);

/// Fresh replications: inputs from the prior, outputs from the model.
class ModelSource final : public ReplicationSource {
public:
    ModelSource(Prior prior, ModelHandle model);
    IoDataset draw(std::uint64_t seed, std::size_t rows) const override;

    const Prior& prior() const noexcept { return prior_; }
    const ModelHandle& model() const noexcept { return model_; }

private:
    Prior prior_;
    ModelHandle model_;
};

/// Inputs of `rows` prior draws and the model's responses, merged.
IoDataset generate(const Prior& prior, const Model& model, std::size_t rows, std::uint64_t seed);

}  // namespace misi
