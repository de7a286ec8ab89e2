#pragma once

#include <stdexcept>
#include <string>

namespace misi {

/// Base class of every error raised by the library. `kind()` is a stable
/// identifier that the CLI prints and tests match on.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define MISI_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {}   \
    }

// data validation
MISI_DEFINE_ERROR(InvalidArgument);
MISI_DEFINE_ERROR(DegenerateSample);
MISI_DEFINE_ERROR(LengthMismatch);
MISI_DEFINE_ERROR(DimensionMismatch);
MISI_DEFINE_ERROR(MissingBandwidth);
MISI_DEFINE_ERROR(UnknownColumn);
MISI_DEFINE_ERROR(RoleMismatch);
MISI_DEFINE_ERROR(IdenticalCvLabels);

// ranking
MISI_DEFINE_ERROR(EmptyInput);
MISI_DEFINE_ERROR(AllSigmasZero);
MISI_DEFINE_ERROR(NonConvergence);
MISI_DEFINE_ERROR(MixedQoi);
MISI_DEFINE_ERROR(InsufficientCorpus);

// models and priors
MISI_DEFINE_ERROR(ModelFailure);
MISI_DEFINE_ERROR(UnknownBuiltin);
MISI_DEFINE_ERROR(SolverFailure);
MISI_DEFINE_ERROR(NegativeSqrtArgument);
MISI_DEFINE_ERROR(DomainError);
MISI_DEFINE_ERROR(BothDiffusivitiesZero);

// cli
MISI_DEFINE_ERROR(ConfigError);
MISI_DEFINE_ERROR(IoError);

#undef MISI_DEFINE_ERROR

}  // namespace misi
