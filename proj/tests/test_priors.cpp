#include "misi/error.hpp"
#include "misi/priors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace misi;

TEST_CASE("Debye length scaling and endpoints") {
    const PhysicalConstants c;
    CHECK(debye_length(300, 2.0, c) == doctest::Approx(debye_length(300, 1.0, c) / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(std::abs(debye_length(208, 1.08, c) - 0.0771) <= 2e-3);
    CHECK(std::abs(debye_length(360, 0.90, c) - 0.1109) <= 2e-3);
    CHECK_THROWS_AS(debye_length(0, 1, c), InvalidArgument);
    CHECK_THROWS_AS(debye_length(300, -1, c), InvalidArgument);
}

TEST_CASE("Debye length is increasing in T and decreasing in cin") {
    const PhysicalConstants c;
    for (double T = 208; T < 432; T += 8) CHECK(debye_length(T + 8, 0.8, c) > debye_length(T, 0.8, c));
    for (double x = 0.52; x < 1.08; x += 0.02) CHECK(debye_length(300, x + 0.02, c) < debye_length(300, x, c));
}

TEST_CASE("surface potential limits") {
    PhysicalConstants c;
    c.V = 1.2;
    c.phi_ecm = 0.1;
    auto big = c;
    big.C_H = 1e30;
    CHECK(std::abs(surface_potential(300, 0.8, big) - (c.V / 2 - c.phi_ecm)) <= 1e-12);
    CHECK(std::abs(surface_potential(300, 1e-30, c) - (c.V / 2 - c.phi_ecm)) <= 1e-12);
}

TEST_CASE("surface potential satisfies its relation") {
    const PhysicalConstants c;
    const double phi = surface_potential(320, 0.8, c);
    CHECK(std::abs(surface_potential_residual(phi, 320, 0.8, c)) < 1e-10);
    CHECK(std::abs(phi) <= std::abs(c.V));
    for (double T : {208.0, 300.0, 432.0})
        for (double x : {0.52, 0.8, 1.08}) {
            const double p = surface_potential(T, x, c);
            CHECK(std::abs(surface_potential_residual(p, T, x, c)) < 1e-10);
        }
}

TEST_CASE("pore half-width") {
    for (double r : {0.5, 1.05, 1.75})
        CHECK(std::abs(pore_half_width(r, 1 - std::numbers::pi / 4)) < 1e-15);
    CHECK(std::abs(pore_half_width(1.75, 0.8375) - 2.0965) <= 5e-3);
    CHECK(std::abs(pore_half_width(1.5, 0.79) - 1.4030) <= 5e-3);
    CHECK(pore_half_width(1.4, 0.67) == doctest::Approx(0.7597).epsilon(2e-4));
    CHECK_THROWS_AS(pore_half_width(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(pore_half_width(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(pore_half_width(-1.0, 0.5), DomainError);
}

TEST_CASE("pore half-width grows with r and omega over the prior box") {
    for (double r = 1.05; r < 1.75; r += 0.05)
        CHECK(pore_half_width(r + 0.05, 0.7) > pore_half_width(r, 0.7));
    for (double w = 0.5025; w < 0.8375; w += 0.01)
        CHECK(pore_half_width(1.4, w + 0.01) > pore_half_width(1.4, w));
}

TEST_CASE("transport QoIs from effective diffusivities") {
    const PhysicalConstants c;
    CHECK(qoi_from_deff(3e-10, 3e-10, 1, 300, c).t_plus == 0.5);
    CHECK(qoi_from_deff(3e-10, 0, 1, 300, c).t_plus == 1.0);
    CHECK(qoi_from_deff(0, 3e-10, 1, 300, c).t_plus == 0.0);
    const auto q = qoi_from_deff(1e-9, 1e-9, 1.0, 298.15, c);
    CHECK(q.keff == doctest::Approx(75.1).epsilon(1e-3));
    CHECK_THROWS_AS(qoi_from_deff(0, 0, 1, 300, c), BothDiffusivitiesZero);
    CHECK_THROWS_AS(qoi_from_deff(-1e-9, 1e-9, 1, 300, c), InvalidArgument);
}

TEST_CASE("prior samples respect the bounds and the derived relations") {
    const PriorSpec spec;
    const PhysicalConstants c;
    const auto d = sample_priors(spec, c, 10000, 42);
    CHECK(d.rows() == 10000);
    CHECK(d.names() == std::vector<std::string>{"T", "cin", "r", "omega", "lambda_D", "phi_G", "l_por"});
    const auto T = d.column("T").values();
    const auto x = d.column("cin").values();
    const auto r = d.column("r").values();
    const auto w = d.column("omega").values();
    const auto ld = d.column("lambda_D").values();
    const auto pg = d.column("phi_G").values();
    const auto lp = d.column("l_por").values();
    for (std::size_t i = 0; i < d.rows(); ++i) {
        REQUIRE((T[i] >= 208 && T[i] <= 432));
        REQUIRE((x[i] >= 0.52 && x[i] <= 1.08));
        REQUIRE((r[i] >= 1.05 && r[i] <= 1.75));
        REQUIRE((w[i] >= 0.5025 && w[i] <= 0.8375));
        REQUIRE(ld[i] == doctest::Approx(debye_length(T[i], x[i], c)).epsilon(1e-12));
        REQUIRE(lp[i] == doctest::Approx(pore_half_width(r[i], w[i])).epsilon(1e-12));
        REQUIRE(std::abs(surface_potential_residual(pg[i], T[i], x[i], c)) < kSurfacePotentialTol * 100);
    }
}

TEST_CASE("prior sampling is deterministic and seed dependent") {
    const PriorSpec spec;
    const PhysicalConstants c;
    const auto a = sample_priors(spec, c, 3000, 9);
    const auto b = sample_priors(spec, c, 3000, 9);
    const auto z = sample_priors(spec, c, 3000, 10);
    for (const auto& n : a.names()) {
        const auto va = a.column(n).values();
        const auto vb = b.column(n).values();
        CHECK(std::equal(va.begin(), va.end(), vb.begin()));
    }
    CHECK(a.column("T")[0] != z.column("T")[0]);
}

TEST_CASE("emit flags select the derived columns") {
    PriorSpec spec;
    spec.emit_phi_G = false;
    spec.emit_lambda_D = false;
    const auto d = sample_priors(spec, PhysicalConstants{}, 10, 1);
    CHECK(d.names() == std::vector<std::string>{"T", "cin", "r", "omega", "l_por"});
}

TEST_CASE("spec and constants validation") {
    PriorSpec bad;
    bad.T = {300, 300};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    PriorSpec badw;
    badw.omega = {0.5, 1.2};
    CHECK_THROWS_AS(badw.validate(), InvalidArgument);
    PhysicalConstants c;
    c.C_H = -1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    PhysicalConstants ok;
    ok.phi_ecm = -0.3;
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("restricting a prior") {
    const auto p = Prior::edlc(PriorSpec{}, PhysicalConstants{});
    const auto q = p.restrict({{"T", {208, 360}}, {"cin", {0.9, 1.08}}});
    const auto d = q.sample(2000, 3);
    for (double t : d.column("T").values()) CHECK(t <= 360);
    const auto ld = d.column("lambda_D").values();
    CHECK(*std::min_element(ld.begin(), ld.end()) >= 0.0771 - 2e-3);
    CHECK(*std::max_element(ld.begin(), ld.end()) <= 0.1109 + 2e-3);

    CHECK_THROWS_AS(p.restrict({{"T", {100, 300}}}), ConfigError);
    CHECK_THROWS_AS(p.restrict({{"T", {300, 300}}}), ConfigError);
    CHECK_THROWS_AS(p.restrict({{"T", {310, 300}}}), ConfigError);
    CHECK_THROWS_AS(p.restrict({{"lambda_D", {0.08, 0.09}}}), ConfigError);

    const auto g = Prior::generic({{"x1", VariablePrior::Kind::normal, 0, 1}, {"x2", VariablePrior::Kind::uniform, 0, 1}});
    const auto gr = g.restrict({{"x1", {0.5, 1.0}}, {"x2", {0.2, 0.4}}});
    const auto gd = gr.sample(5000, 4);
    for (double v : gd.column("x1").values()) CHECK((v >= 0.5 && v <= 1.0));
    for (double v : gd.column("x2").values()) CHECK((v >= 0.2 && v <= 0.4));
    CHECK(g.labels() == std::vector<std::string>{"x1", "x2"});
}
