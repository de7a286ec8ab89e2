#include "misi/priors.hpp"

#include "misi/error.hpp"
#include "misi/normal.hpp"
#include "misi/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

namespace misi {

namespace {

constexpr std::size_t kSampleBlock = 1024;
constexpr int kMaxSolverIterations = 200;
constexpr double kFixedPointDamping = 0.5;
constexpr int kBracketScanPoints = 512;

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

void require_state(double T, double cin) {
    if (!positive(T)) throw InvalidArgument("temperature must be positive");
    if (!positive(cin)) throw InvalidArgument("concentration must be positive");
}

// Runs fill(rng, begin, end) over row blocks, each with its own stream.
template <class Fill>
void for_each_block(std::size_t count, std::uint64_t seed, Fill&& fill) {
    const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
    std::vector<std::exception_ptr> errors(blocks);
    const auto n_blocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bs = 0; bs < n_blocks; ++bs) {
        const auto b = static_cast<std::size_t>(bs);
        try {
            Rng rng(derive_seed(seed, std::uint64_t{b}));
            fill(rng, b * kSampleBlock, std::min(count, (b + 1) * kSampleBlock));
        } catch (...) {
            errors[b] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double draw_uniform(Rng& rng, Interval range) { return range.lo + (range.hi - range.lo) * unit_uniform(rng()); }

// Inverse-CDF draw from N(mean, sd) restricted to [lo, hi].
double draw_normal(Rng& rng, const VariablePrior& v) {
    double zl = (v.lo - v.a) / v.b;
    double zh = (v.hi - v.a) / v.b;
    // Work in the lower tail for accuracy.
    const bool flip = zl > 0.0;
    if (flip) {
        std::swap(zl, zh);
        zl = -zl;
        zh = -zh;
    }
    const double pl = normal::cdf(zl);
    const double ph = normal::cdf(zh);
    // open interval, so the quantile is finite
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    double z = normal::quantile(pl + u * (ph - pl));
    z = std::clamp(z, zl, zh);
    return v.a + v.b * (flip ? -z : z);
}

}  // namespace

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

void PhysicalConstants::validate() const {
    for (double x : {R, F, k_B, e, epsilon, z, nu, V, C_H})
        if (!positive(x)) throw InvalidArgument("physical constants must be positive and finite");
    if (!std::isfinite(phi_ecm) || !std::isfinite(phi_min))
        throw InvalidArgument("physical constants must be finite");
}

double debye_length(double T, double cin, const PhysicalConstants& c) {
    require_state(T, cin);
    const double conc = cin * units::mol_per_litre_to_mol_per_m3;
    return std::sqrt(c.R * T * c.epsilon / (2.0 * c.F * c.F * c.z * c.z * c.nu * conc)) * units::m_to_nm;
}

namespace {

struct SurfaceRelation {
    double half_v;  // V/2 - phi_ecm
    double amp;     // sqrt(4 eps R T z^2 c) / C_H
    double k;       // e / (k_B T)
    double cosh_min;
    double phi_min_abs;

    SurfaceRelation(double T, double cin, const PhysicalConstants& c) {
        const double conc = cin * units::mol_per_litre_to_mol_per_m3;
        half_v = 0.5 * c.V - c.phi_ecm;
        amp = std::sqrt(4.0 * c.epsilon * c.R * T * c.z * c.z * conc) / c.C_H;
        k = c.e / (c.k_B * T);
        cosh_min = std::cosh(k * c.phi_min);
        phi_min_abs = std::abs(c.phi_min);
    }

    bool admissible(double phi) const { return std::abs(phi) >= phi_min_abs; }

    double root_arg(double phi) const { return std::max(0.0, std::cosh(k * phi) - cosh_min); }

    double rhs(double phi) const { return half_v - amp * std::sqrt(root_arg(phi)); }

    double residual(double phi) const { return phi - rhs(phi); }

    // d residual / d phi; infinite where the square-root argument vanishes.
    double slope(double phi) const {
        const double s = std::sqrt(root_arg(phi));
        return 1.0 + amp * k * std::sinh(k * phi) / (2.0 * s);
    }
};

}  // namespace

double surface_potential_residual(double phi, double T, double cin, const PhysicalConstants& c) {
    require_state(T, cin);
    const SurfaceRelation rel(T, cin, c);
    if (!rel.admissible(phi)) throw NegativeSqrtArgument("phi is inside the excluded band |phi| < |phi_min|");
    return rel.residual(phi);
}

double surface_potential(double T, double cin, const PhysicalConstants& c, double solver_tol) {
    require_state(T, cin);
    if (!positive(solver_tol)) throw InvalidArgument("solver tolerance must be positive");
    const SurfaceRelation rel(T, cin, c);
    const double bound = std::abs(c.V);
    if (rel.phi_min_abs > bound)
        throw NegativeSqrtArgument("no phi in [-|V|, |V|] keeps the square-root argument nonnegative");

    // damped fixed point
    double x = std::clamp(rel.half_v, -bound, bound);
    for (int i = 0; i < kMaxSolverIterations && rel.admissible(x) && std::isfinite(x); ++i) {
        const double r = rel.rhs(x);
        if (std::abs(x - r) < solver_tol) return x;
        x = (1.0 - kFixedPointDamping) * x + kFixedPointDamping * r;
        if (std::abs(x) > bound) break;
    }

    // Scan the admissible part of [-bound, bound] for the sign change nearest
    // the fixed-point start, then Newton with a bisection safeguard.
    const double start = std::clamp(rel.half_v, -bound, bound);
    double best_a = 0.0, best_b = 0.0, best_dist = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int side = -1; side <= 1; side += 2) {
        const double lo = rel.phi_min_abs;
        const double step = (bound - lo) / kBracketScanPoints;
        if (!(step > 0.0)) continue;
        double prev_x = side * lo;
        double prev_g = rel.residual(prev_x);
        if (prev_g == 0.0) return prev_x;
        for (int j = 1; j <= kBracketScanPoints; ++j) {
            const double xj = side * (lo + step * j);
            const double gj = rel.residual(xj);
            if (gj == 0.0) return xj;
            if ((gj < 0.0) != (prev_g < 0.0)) {
                const double mid = 0.5 * (xj + prev_x);
                if (std::abs(mid - start) < best_dist) {
                    best_dist = std::abs(mid - start);
                    best_a = std::min(xj, prev_x);
                    best_b = std::max(xj, prev_x);
                    found = true;
                }
            }
            prev_x = xj;
            prev_g = gj;
        }
    }
    if (!found) throw SolverFailure("no sign change of the surface-potential residual in [-|V|, |V|]");

    double a = best_a, b = best_b;
    const bool rising = rel.residual(a) < 0.0;
    x = 0.5 * (a + b);
    for (int i = 0; i < kMaxSolverIterations; ++i) {
        const double g = rel.residual(x);
        if (std::abs(g) < solver_tol) return x;
        if ((g < 0.0) == rising)
            a = x;
        else
            b = x;
        double next = x - g / rel.slope(x);
        if (!std::isfinite(next) || next <= a || next >= b) next = 0.5 * (a + b);
        if (next == x) break;
        x = next;
    }
    throw SolverFailure("surface-potential residual above " + std::to_string(solver_tol) + " after " +
                        std::to_string(kMaxSolverIterations) + " iterations");
}

double pore_half_width(double r, double omega) {
    if (!positive(r)) throw DomainError("pore radius must be positive");
    if (!(omega > 0.0 && omega < 1.0)) throw DomainError("porosity must lie in (0, 1)");
    return r * (std::sqrt(std::numbers::pi / (4.0 * (1.0 - omega))) - 1.0);
}

TransportQoi qoi_from_deff(double d_plus, double d_minus, double cin, double T, const PhysicalConstants& c) {
    require_state(T, cin);
    if (!(d_plus >= 0.0) || !(d_minus >= 0.0) || !std::isfinite(d_plus) || !std::isfinite(d_minus))
        throw InvalidArgument("effective diffusivities must be finite and nonnegative");
    const double total = d_plus + d_minus;
    if (total == 0.0) throw BothDiffusivitiesZero("both effective diffusivities are zero");
    const double conc = cin * units::mol_per_litre_to_mol_per_m3;
    TransportQoi q;
    q.keff = c.nu * c.z * c.z * c.F * c.F * conc / (c.R * T) * total * units::s_per_m_to_ms_per_cm;
    q.t_plus = d_plus / total;
    return q;
}

void PriorSpec::validate() const {
    const auto check = [](Interval i, const char* name) {
        if (!(std::isfinite(i.lo) && std::isfinite(i.hi) && i.lo < i.hi))
            throw InvalidArgument(std::string("prior range of ") + name + " must satisfy min < max");
    };
    check(T, "T");
    check(cin, "cin");
    check(r, "r");
    check(omega, "omega");
    if (!(T.lo > 0.0 && cin.lo > 0.0 && r.lo > 0.0)) throw InvalidArgument("T, cin and r must be positive");
    if (!(omega.lo > 0.0 && omega.hi < 1.0)) throw InvalidArgument("omega must lie inside (0, 1)");
}

IoDataset sample_priors(const PriorSpec& spec, const PhysicalConstants& constants, std::size_t count,
                        std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("count must be at least 1");
    spec.validate();
    constants.validate();
    std::vector<double> T(count), cin(count), r(count), omega(count);
    std::vector<double> lambda(spec.emit_lambda_D ? count : 0);
    std::vector<double> phi(spec.emit_phi_G ? count : 0);
    std::vector<double> lpor(spec.emit_l_por ? count : 0);

    for_each_block(count, seed, [&](Rng& rng, std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) {
            T[m] = draw_uniform(rng, spec.T);
            cin[m] = draw_uniform(rng, spec.cin);
            r[m] = draw_uniform(rng, spec.r);
            omega[m] = draw_uniform(rng, spec.omega);
            if (spec.emit_lambda_D) lambda[m] = debye_length(T[m], cin[m], constants);
            if (spec.emit_phi_G) {
                try {
                    phi[m] = surface_potential(T[m], cin[m], constants);
                } catch (const Error& e) {
                    throw SolverFailure("row " + std::to_string(m) + ": " + e.what());
                }
            }
            if (spec.emit_l_por) lpor[m] = pore_half_width(r[m], omega[m]);
        }
    });

    IoDataset out;
    out.add(SampleColumn("T", std::move(T), "K"), Role::cv);
    out.add(SampleColumn("cin", std::move(cin), "mol/L"), Role::cv);
    out.add(SampleColumn("r", std::move(r), "nm"), Role::cv);
    out.add(SampleColumn("omega", std::move(omega), "1"), Role::cv);
    if (spec.emit_lambda_D) out.add(SampleColumn("lambda_D", std::move(lambda), "nm"), Role::cv);
    if (spec.emit_phi_G) out.add(SampleColumn("phi_G", std::move(phi), "V"), Role::cv);
    if (spec.emit_l_por) out.add(SampleColumn("l_por", std::move(lpor), "nm"), Role::cv);
    return out;
}

Prior Prior::edlc(PriorSpec spec, PhysicalConstants constants) {
    spec.validate();
    constants.validate();
    Prior p;
    p.edlc_ = true;
    p.spec_ = spec;
    p.constants_ = constants;
    return p;
}

Prior Prior::generic(std::vector<VariablePrior> variables) {
    if (variables.empty()) throw InvalidArgument("a prior needs at least one variable");
    for (std::size_t i = 0; i < variables.size(); ++i) {
        auto& v = variables[i];
        if (v.name.empty()) throw InvalidArgument("prior variables need names");
        for (std::size_t j = 0; j < i; ++j)
            if (variables[j].name == v.name) throw InvalidArgument("duplicate prior variable '" + v.name + "'");
        if (v.kind == VariablePrior::Kind::uniform) {
            if (!(std::isfinite(v.a) && std::isfinite(v.b) && v.a < v.b))
                throw InvalidArgument("uniform prior of '" + v.name + "' needs min < max");
            v.lo = std::max(v.lo, v.a);
            v.hi = std::min(v.hi, v.b);
        } else if (!(std::isfinite(v.a) && positive(v.b))) {
            throw InvalidArgument("normal prior of '" + v.name + "' needs a finite mean and positive sd");
        }
        if (!(v.lo < v.hi)) throw InvalidArgument("empty support for '" + v.name + "'");
    }
    Prior p;
    p.variables_ = std::move(variables);
    return p;
}

std::vector<std::string> Prior::labels() const {
    std::vector<std::string> out;
    if (edlc_) {
        out = {"T", "cin", "r", "omega"};
        if (spec_.emit_lambda_D) out.emplace_back("lambda_D");
        if (spec_.emit_phi_G) out.emplace_back("phi_G");
        if (spec_.emit_l_por) out.emplace_back("l_por");
    } else {
        for (const auto& v : variables_) out.push_back(v.name);
    }
    return out;
}

Interval Prior::support(const std::string& name) const {
    if (edlc_) {
        if (name == "T") return spec_.T;
        if (name == "cin") return spec_.cin;
        if (name == "r") return spec_.r;
        if (name == "omega") return spec_.omega;
    } else {
        for (const auto& v : variables_)
            if (v.name == name) return {v.lo, v.hi};
    }
    throw UnknownColumn("'" + name + "' is not an independently drawn CV");
}

IoDataset Prior::sample(std::size_t count, std::uint64_t seed) const {
    if (edlc_) return sample_priors(spec_, constants_, count, seed);
    if (count < 1) throw InvalidArgument("count must be at least 1");
    const std::size_t p = variables_.size();
    std::vector<std::vector<double>> cols(p, std::vector<double>(count));
    for_each_block(count, seed, [&](Rng& rng, std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m)
            for (std::size_t j = 0; j < p; ++j) {
                const auto& v = variables_[j];
                cols[j][m] = v.kind == VariablePrior::Kind::uniform ? draw_uniform(rng, {v.lo, v.hi})
                                                                    : draw_normal(rng, v);
            }
    });
    IoDataset out;
    for (std::size_t j = 0; j < p; ++j) out.add(SampleColumn(variables_[j].name, std::move(cols[j])), Role::cv);
    return out;
}

Prior Prior::restrict(const Subspace& subspace) const {
    Prior out = *this;
    for (const auto& [name, range] : subspace) {
        Interval current;
        try {
            current = support(name);
        } catch (const UnknownColumn&) {
            throw ConfigError("subspace names '" + name + "', which is not an independently drawn CV");
        }
        if (!(std::isfinite(range.lo) && std::isfinite(range.hi) && range.lo < range.hi))
            throw ConfigError("subspace range of '" + name + "' is empty or degenerate");
        if (range.lo < current.lo || range.hi > current.hi)
            throw ConfigError("subspace range of '" + name + "' leaves the prior support");
        if (edlc_) {
            Interval* target = name == "T" ? &out.spec_.T
                               : name == "cin" ? &out.spec_.cin
                               : name == "r" ? &out.spec_.r
                                             : &out.spec_.omega;
            *target = range;
        } else {
            for (auto& v : out.variables_)
                if (v.name == name) {
                    v.lo = range.lo;
                    v.hi = range.hi;
                }
        }
    }
    return out;
}

}  // namespace misi
