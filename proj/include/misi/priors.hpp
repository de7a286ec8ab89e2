#pragma once

// Prior sampling of control variables.
//
// The electrochemical prior draws T, cin, r and omega independently and
// uniformly, then derives the Debye length, the surface potential and the
// pore half-width row by row. Generic priors (independent normal or uniform
// marginals) back the analytic benchmark models.
//
// Units: T in K, cin in mol/L, r and lengths in nm, potentials in V.
// Computation is in SI; conversions live in the `units` namespace only.

#include "misi/dataset.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace misi {

namespace units {
inline constexpr double mol_per_litre_to_mol_per_m3 = 1e3;
inline constexpr double m_to_nm = 1e9;
inline constexpr double s_per_m_to_ms_per_cm = 10.0;
}  // namespace units

struct PhysicalConstants {
    double R = 8.314462618;         ///< J/(mol K)
    double F = 96485.33212;         ///< C/mol
    double k_B = 1.380649e-23;      ///< J/K
    double e = 1.602176634e-19;     ///< C
    double epsilon = 6.8985e-11;    ///< F/m, calibrated on the Debye-length endpoints
    double z = 1.0;                 ///< ion valence
    double nu = 1.0;                ///< stoichiometric coefficient
    double V = 1.0;                 ///< V, applied voltage (placeholder)
    double phi_ecm = 0.0;           ///< V (placeholder)
    double C_H = 0.2;               ///< F/m^2, Helmholtz capacitance (placeholder)
    double phi_min = 0.0;           ///< V (placeholder)

    /// Throws InvalidArgument unless every constant except phi_ecm and
    /// phi_min is finite and positive.
    void validate() const;
};

/// Debye length in nm. Requires T > 0, cin > 0.
double debye_length(double T, double cin, const PhysicalConstants& c);

inline constexpr double kSurfacePotentialTol = 1e-12;

/// Solves phi = V/2 - phi_ecm - sqrt(4 eps R T z^2 c)/C_H
///                  * sqrt(cosh(e phi/(k_B T)) - cosh(e phi_min/(k_B T)))
/// for phi in V, with c in mol/m^3. Damped fixed-point iteration first,
/// bracketed Newton on [-|V|, |V|] if that stalls or leaves the domain.
/// Throws InvalidArgument, NegativeSqrtArgument (no admissible phi in the
/// bracket), SolverFailure.
double surface_potential(double T, double cin, const PhysicalConstants& c,
                         double solver_tol = kSurfacePotentialTol);

/// lhs - rhs of the surface-potential relation at `phi`.
double surface_potential_residual(double phi, double T, double cin, const PhysicalConstants& c);

/// r (sqrt(pi / (4 (1 - omega))) - 1) in nm. Throws DomainError unless
/// r > 0 and 0 < omega < 1.
double pore_half_width(double r, double omega);

struct TransportQoi {
    double keff = 0.0;    ///< mS/cm
    double t_plus = 0.0;  ///< in [0, 1]
};

/// Effective conductivity and cation transference number from effective
/// diffusivities in m^2/s. Throws InvalidArgument, BothDiffusivitiesZero.
TransportQoi qoi_from_deff(double d_plus, double d_minus, double cin, double T, const PhysicalConstants& c);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct PriorSpec {
    Interval T{208.0, 432.0};        ///< K
    Interval cin{0.52, 1.08};        ///< mol/L
    Interval r{1.05, 1.75};          ///< nm
    Interval omega{0.5025, 0.8375};  ///< dimensionless
    bool emit_lambda_D = true;
    bool emit_phi_G = true;
    bool emit_l_por = true;

    /// Throws InvalidArgument unless lo < hi for every CV, T, cin, r > 0 and
    /// omega inside (0, 1).
    void validate() const;
};

/// Independent draws T, cin, r, omega plus the requested derived columns.
/// Rows are generated in fixed-size blocks, each from its own derived seed,
/// so the output is independent of the thread count. Throws SolverFailure
/// naming the row if a surface potential cannot be solved.
IoDataset sample_priors(const PriorSpec& spec, const PhysicalConstants& constants, std::size_t count,
                        std::uint64_t seed);

/// Uniform in [0, 1) with 53 random bits.
double unit_uniform(std::uint64_t bits);

/// Independent marginal of one generic CV. Normal marginals narrowed to a
/// sub-range become truncated normals.
struct VariablePrior {
    enum class Kind { uniform, normal };
    std::string name;
    Kind kind = Kind::normal;
    double a = 0.0;  ///< uniform: lower bound; normal: mean
    double b = 1.0;  ///< uniform: upper bound; normal: standard deviation
    double lo = -std::numeric_limits<double>::infinity();  ///< support
    double hi = std::numeric_limits<double>::infinity();
};

using Subspace = std::map<std::string, Interval>;

/// A prior over named CVs: either the electrochemical prior or a product
/// of generic marginals.
class Prior {
public:
    static Prior edlc(PriorSpec spec, PhysicalConstants constants);
    static Prior generic(std::vector<VariablePrior> variables);

    bool is_edlc() const noexcept { return edlc_; }
    const PriorSpec& edlc_spec() const noexcept { return spec_; }
    const PhysicalConstants& constants() const noexcept { return constants_; }
    const std::vector<VariablePrior>& variables() const noexcept { return variables_; }

    std::vector<std::string> labels() const;

    /// Support of an independently drawn CV. Throws UnknownColumn.
    Interval support(const std::string& name) const;

    IoDataset sample(std::size_t count, std::uint64_t seed) const;

    /// Narrows independently drawn CVs. Throws ConfigError if a name is not
    /// an independent CV, a range is empty or degenerate, or it leaves the
    /// current support.
    Prior restrict(const Subspace& subspace) const;

private:
    bool edlc_ = false;
    PriorSpec spec_;
    PhysicalConstants constants_;
    std::vector<VariablePrior> variables_;
};

}  // namespace misi
