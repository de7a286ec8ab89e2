#include "misi/error.hpp"
#include "misi/mi.hpp"
#include "misi/models.hpp"
#include "misi/ranking.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

using namespace misi;

namespace {

const std::string kFake = MISI_FAKE_MODEL;

IoDataset inputs(const Prior& prior, std::size_t n, std::uint64_t seed) { return prior.sample(n, seed); }

ModelHandle fake(const std::string& args, std::vector<std::string> in, std::vector<std::string> out,
                 std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
    ExternalModelConfig c;
    c.command = "'" + kFake + "' " + args;
    c.inputs = std::move(in);
    c.outputs = std::move(out);
    c.timeout = timeout;
    return external_model(c);
}

double variance(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("builtin models are deterministic in the seed") {
    for (const auto& name : kBuiltinNames) {
        const auto params = BuiltinParams::defaults(name);
        const auto model = builtin_model(name, params);
        const auto prior = builtin_prior(name, params);
        CHECK(model->output_labels() == std::vector<std::string>{"y"});
        const auto x = inputs(prior, 500, 1);
        const auto a = model->query(x, 5).column("y").values();
        const auto b = model->query(x, 5).column("y").values();
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    const auto lin = builtin_model("linear_gaussian");
    const auto x = inputs(builtin_prior("linear_gaussian", BuiltinParams::defaults("linear_gaussian")), 50, 2);
    CHECK(lin->query(x, 1).column("y")[0] != lin->query(x, 2).column("y")[0]);
}

TEST_CASE("unknown builtins and bad parameters") {
    CHECK_THROWS_AS(builtin_model("nope"), UnknownBuiltin);
    auto p = BuiltinParams::defaults("linear_gaussian");
    p.noise = -1;
    CHECK_THROWS_AS(builtin_model("linear_gaussian", p), InvalidArgument);
}

TEST_CASE("Ishigami output variance") {
    const double a = 7, b = 0.1, pi4 = std::pow(std::numbers::pi, 4);
    const double expected = 0.5 + a * a / 8 + b * pi4 / 5 + b * b * pi4 * pi4 / 18;
    CHECK(expected == doctest::Approx(13.84).epsilon(1e-3));
    const auto params = BuiltinParams::defaults("ishigami");
    const auto d = generate(builtin_prior("ishigami", params), *builtin_model("ishigami", params), 100000, 3);
    for (const auto& n : {"x1", "x2", "x3"})
        for (double v : d.column(n).values()) REQUIRE(std::abs(v) <= std::numbers::pi);
    CHECK(std::abs(variance(d.column("y").values()) - expected) <= 0.05 * expected);
}

TEST_CASE("constant model gives zero indices") {
    const auto params = BuiltinParams::defaults("constant");
    const auto d = generate(builtin_prior("constant", params), *builtin_model("constant", params), 1000, 4);
    for (double v : d.column("y").values()) CHECK(v == params.value);
    const auto cvs = d.names(Role::cv);
    const auto e = estimate_indices(d, cvs, "y", 1);
    for (const auto& x : e) {
        CHECK(x.degenerate);
        CHECK(x.value == 0.0);
    }
}

TEST_CASE("linear Gaussian indices follow the correlation closed form") {
    const auto params = BuiltinParams::defaults("linear_gaussian");
    const auto d =
        generate(builtin_prior("linear_gaussian", params), *builtin_model("linear_gaussian", params), 10000, 5);
    const double norm = std::sqrt(16 + 4 + 1 + 1);
    const auto e = misi_first_all(d, std::vector<std::string>{"x1", "x2", "x3"}, "y");
    const double a[] = {4, 2, 1};
    for (int i = 0; i < 3; ++i) {
        const double rho = a[i] / norm;
        CHECK(std::abs(e[i].value + 0.5 * std::log(1 - rho * rho)) <= 0.05);
    }
}

TEST_CASE("regional model switches its dominant input inside the region") {
    const auto params = BuiltinParams::defaults("regional_linear");
    const auto model = builtin_model("regional_linear", params);
    const auto prior = builtin_prior("regional_linear", params);
    const auto outer = generate(prior, *model, 5000, 6);
    const auto inner = generate(prior.restrict({{"x1", {0.75, 1.0}}}), *model, 5000, 6);
    const std::vector<std::string> cvs = {"x1", "x2"};
    const auto eo = misi_first_all(outer, cvs, "y");
    const auto ei = misi_first_all(inner, cvs, "y");
    CHECK(eo[0].value > eo[1].value);
    CHECK(ei[1].value > ei[0].value);
}

TEST_CASE("external echo saturates and is flagged") {
    const auto prior = Prior::generic({{"x1"}, {"x2"}});
    const auto x = inputs(prior, 2000, 7);
    const auto m = fake("echo x1 y", {"x1", "x2"}, {"y"});
    auto d = x;
    d.merge(m->query(x, 1));
    const auto e1 = misi_first(d, "x1", "y");
    const auto e2 = misi_first(d, "x2", "y");
    CHECK(e1.near_functional);
    CHECK(e1.value > 1.5);
    CHECK(e1.value > e2.value + 1.0);
}

TEST_CASE("external model failures") {
    const auto prior = Prior::generic({{"x1"}});
    const auto x = inputs(prior, 20, 8);
    CHECK_THROWS_WITH_AS(fake("wrong_rows", {"x1"}, {"y"})->query(x, 0),
                         doctest::Contains("19 rows for 20"), ModelFailure);
    CHECK_THROWS_WITH_AS(fake("fail", {"x1"}, {"y"})->query(x, 0), doctest::Contains("status 3"), ModelFailure);
    CHECK_THROWS_WITH_AS(fake("fail", {"x1"}, {"y"})->query(x, 0), doctest::Contains("simulated crash"),
                         ModelFailure);
    CHECK_THROWS_AS(fake("garbage", {"x1"}, {"y"})->query(x, 0), ModelFailure);
    CHECK_THROWS_WITH_AS(fake("echo x1 z", {"x1"}, {"y"})->query(x, 0), doctest::Contains("'y'"), ModelFailure);

    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_WITH_AS(fake("sleep 20", {"x1"}, {"y"}, std::chrono::milliseconds(300))->query(x, 0),
                         doctest::Contains("timed out"), ModelFailure);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));

    ExternalModelConfig bad;
    bad.inputs = {"x1"};
    bad.outputs = {"y"};
    CHECK_THROWS_AS(external_model(bad), InvalidArgument);
    bad.command = "true";
    bad.outputs = {"x1"};
    CHECK_THROWS_AS(external_model(bad), InvalidArgument);
}

TEST_CASE("external models receive the seed") {
    const auto prior = Prior::generic({{"x1"}});
    const auto x = inputs(prior, 10, 9);
    const auto m = fake("seed", {"x1"}, {"y"});
    CHECK(m->query(x, 123456).column("y")[0] == 123456.0);
    CHECK(m->query(x, 77).column("y")[9] == 77.0);
}

TEST_CASE("external linear model agrees with the builtin") {
    const auto params = BuiltinParams::defaults("linear_gaussian");
    const auto prior = builtin_prior("linear_gaussian", params);
    const auto ext = fake("linear", {"x1", "x2", "x3"}, {"y"});
    const auto de = generate(prior, *ext, 10000, 10);
    const auto db = generate(prior, *builtin_model("linear_gaussian", params), 10000, 10);
    const std::vector<std::string> cvs = {"x1", "x2", "x3"};
    const auto ee = misi_first_all(de, cvs, "y");
    const auto eb = misi_first_all(db, cvs, "y");
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(ee[i].value - eb[i].value) <= 3 * std::hypot(ee[i].std_error, eb[i].std_error) + 0.02);

    const auto a = generate(prior, *ext, 100, 11);
    const auto b = generate(prior, *ext, 100, 11);
    CHECK(a.column("y")[42] == b.column("y")[42]);
}

TEST_CASE("diffusivity assembly") {
    const PhysicalConstants c;
    const auto prior = Prior::edlc(PriorSpec{}, c);
    const auto inner = fake("deff", prior.labels(), {"deff_plus", "deff_minus"});
    const auto model = deff_assembly(inner, c);
    CHECK(model->output_labels() == std::vector<std::string>{"keff", "t_plus"});
    const auto d = generate(prior, *model, 200, 12);
    const auto T = d.column("T").values();
    const auto x = d.column("cin").values();
    const auto k = d.column("keff").values();
    const auto t = d.column("t_plus").values();
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const auto q = qoi_from_deff(1e-9 * T[i] / 300.0, 1.5e-9 * x[i], x[i], T[i], c);
        CHECK(k[i] == doctest::Approx(q.keff).epsilon(1e-12));
        CHECK(t[i] == doctest::Approx(q.t_plus).epsilon(1e-12));
        CHECK((t[i] >= 0.0 && t[i] <= 1.0));
        CHECK(k[i] > 0.0);
    }
}

TEST_CASE("model sources draw reproducible replications") {
    const auto params = BuiltinParams::defaults("linear_gaussian");
    const ModelSource src(builtin_prior("linear_gaussian", params), builtin_model("linear_gaussian", params));
    const auto a = src.draw(5, 64);
    const auto b = src.draw(5, 64);
    CHECK(a.rows() == 64);
    CHECK(a.names() == std::vector<std::string>{"x1", "x2", "x3", "y"});
    CHECK(a.column("y")[10] == b.column("y")[10]);
    CHECK(a.column("y")[10] != src.draw(6, 64).column("y")[10]);
}
