#include "misi/error.hpp"
#include "misi/normal.hpp"
#include "misi/ranking.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <omp.h>

using namespace misi;

namespace {

// Phi^-1(0.995) / sqrt(2) and Phi^-1(0.995), independent of normal::quantile.
constexpr double kZEqualPair = 1.8213863677184492;
constexpr double kZ995 = 2.5758293035489004;

MisiEstimate est(std::string cv, double value, double se, std::string qoi = "y", std::size_t m = 1000) {
    MisiEstimate e;
    e.cv_labels = {std::move(cv)};
    e.qoi_label = std::move(qoi);
    e.value = value;
    e.std_error = se;
    e.sample_count = m;
    return e;
}

class AdditiveSource final : public ReplicationSource {
public:
    AdditiveSource(std::vector<double> a, double sigma) : a_(std::move(a)), sigma_(sigma) {}
    IoDataset draw(std::uint64_t seed, std::size_t rows) const override {
        return testing::additive(rows, a_, sigma_, seed);
    }

private:
    std::vector<double> a_;
    double sigma_;
};

class FailingSource final : public ReplicationSource {
public:
    IoDataset draw(std::uint64_t seed, std::size_t) const override {
        throw ModelFailure("seed " + std::to_string(seed));
    }
};

}  // namespace

TEST_CASE("rank values") {
    CHECK(rank_values(std::vector<double>{0.5, 0.2, 0.9}) == std::vector<int>{2, 3, 1});
    CHECK(rank_values(std::vector<double>{5, 4, 3, 2, 1}) == std::vector<int>{1, 2, 3, 4, 5});
    CHECK(rank_values(std::vector<double>{0.4, 0.4}) == std::vector<int>{2, 2});
    CHECK(rank_values(std::vector<double>{1.0, 3.0, 3.0, 0.0}) == std::vector<int>{3, 2, 2, 4});
    CHECK_THROWS_AS(rank_values(std::vector<double>{}), EmptyInput);
    CHECK_THROWS_AS(rank_values(std::vector<double>{1.0, std::nan("")}), InvalidArgument);
}

TEST_CASE("distinct values rank to a permutation of 1..p") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        const auto v = testing::normals(rng, 1 + rep % 9);
        auto r = rank_values(v);
        std::sort(r.begin(), r.end());
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == static_cast<int>(i + 1));
    }
}

TEST_CASE("adjusted level closed forms") {
    const auto two = adjusted_level(std::vector<double>{1.0, 1.0}, 0.01);
    CHECK(two.z_level == doctest::Approx(kZEqualPair).epsilon(1e-6));
    CHECK(std::abs(two.z_level - kZEqualPair) < 1e-6);
    CHECK(two.newton_iters <= 2);

    for (const double c : {1e-3, 0.7, 42.0}) {
        const auto three = adjusted_level(std::vector<double>{c, c, c}, 0.01);
        CHECK(std::abs(three.z_level - kZEqualPair) < 1e-6);
    }

    const auto zero = adjusted_level(std::vector<double>{1.0, 0.0}, 0.01);
    CHECK(std::abs(zero.z_level - kZ995) < 1e-6);
}

TEST_CASE("adjusted level is scale free") {
    const std::vector<double> eq = {0.3, 0.3};
    const auto base = adjusted_level(eq);
    for (const double c : {1e-3, 1.0, 1e3}) {
        const std::vector<double> s = {c * 0.3, c * 0.3};
        const auto r = adjusted_level(s);
        CHECK(r.z_level == base.z_level);
        CHECK(r.newton_iters == base.newton_iters);
    }
    const std::vector<double> skew = {0.02, 0.5, 0.13, 0.07};
    const auto b2 = adjusted_level(skew);
    for (const double c : {1e-3, 1e3}) {
        std::vector<double> s = skew;
        for (auto& x : s) x *= c;
        CHECK(adjusted_level(s).z_level == doctest::Approx(b2.z_level).epsilon(1e-12));
    }
}

TEST_CASE("adjusted level decreases as gamma_bar grows") {
    const std::vector<double> s = {0.1, 0.2, 0.05, 0.3, 0.15};
    double prev = std::numeric_limits<double>::infinity();
    for (const double g : {0.001, 0.005, 0.01, 0.05, 0.1, 0.3, 0.6}) {
        const double z = adjusted_level(s, g).z_level;
        CHECK(z > 0.0);
        CHECK(z < prev);
        prev = z;
    }
}

TEST_CASE("adjusted level solves its defining equation for skewed sigmas") {
    const std::vector<double> s = {1e-4, 1.0, 3.0, 0.001, 50.0};
    const auto r = adjusted_level(s, 0.01);
    const std::size_t p = s.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t l = k + 1; l < p; ++l)
            sum += normal::upper_tail(r.z_level * (s[k] + s[l]) / std::hypot(s[k], s[l]));
    CHECK(4.0 / (p * (p - 1.0)) * sum == doctest::Approx(0.01).epsilon(1e-7));
}

TEST_CASE("adjusted level errors") {
    CHECK_THROWS_AS(adjusted_level(std::vector<double>{1.0}), InvalidArgument);
    CHECK_THROWS_AS(adjusted_level(std::vector<double>{0.0, 0.0}), AllSigmasZero);
    CHECK_THROWS_AS(adjusted_level(std::vector<double>{0.0, 0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(adjusted_level(std::vector<double>{1.0, 1.0}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(adjusted_level(std::vector<double>{1.0, -1.0}), InvalidArgument);
}

TEST_CASE("ranked report resolves separated estimates only") {
    const std::vector<MisiEstimate> sep = {est("b", 0.1, 0.01), est("a", 0.9, 0.01)};
    const auto r = ranked_report(sep);
    CHECK(r.ordered_labels == std::vector<std::string>{"a", "b"});
    CHECK(r.theta == std::vector<double>{0.9, 0.1});
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].resolved);
    CHECK(r.all_resolved());
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(r.intervals[k].first == doctest::Approx(r.theta[k] - r.z_level * r.sigma[k]));
        CHECK(r.intervals[k].second == doctest::Approx(r.theta[k] + r.z_level * r.sigma[k]));
    }

    const std::vector<MisiEstimate> same = {est("a", 0.5, 0.01), est("b", 0.5, 0.01)};
    const auto s = ranked_report(same);
    CHECK_FALSE(s.pairs[0].resolved);
    CHECK(s.ordered_labels == std::vector<std::string>{"a", "b"});
}

TEST_CASE("ranked report ordering ignores input order") {
    std::vector<MisiEstimate> v = {est("c", 0.3, 0.02), est("a", 0.5, 0.05), est("d", 0.3, 0.01),
                                   est("b", 0.9, 0.03)};
    const auto base = ranked_report(v);
    CHECK(base.ordered_labels == std::vector<std::string>{"b", "a", "c", "d"});
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.label() < y.label(); });
    do {
        const auto r = ranked_report(v);
        CHECK(r.ordered_labels == base.ordered_labels);
        CHECK(r.z_level == base.z_level);
    } while (std::next_permutation(v.begin(), v.end(),
                                   [](const auto& x, const auto& y) { return x.label() < y.label(); }));
}

TEST_CASE("ranked report validation") {
    CHECK_THROWS_AS(ranked_report(std::vector<MisiEstimate>{}), EmptyInput);
    const std::vector<MisiEstimate> mixed = {est("a", 0.1, 0.01, "y"), est("b", 0.2, 0.01, "w")};
    CHECK_THROWS_AS(ranked_report(mixed), MixedQoi);
    const std::vector<MisiEstimate> counts = {est("a", 0.1, 0.01, "y", 10), est("b", 0.2, 0.01, "y", 20)};
    CHECK_THROWS_AS(ranked_report(counts), InvalidArgument);

    const std::vector<MisiEstimate> one = {est("a", 0.1, 0.01)};
    const auto r = ranked_report(one);
    CHECK(std::abs(r.z_level - kZ995) < 1e-6);
    CHECK(r.pairs.empty());
}

TEST_CASE("additive model pairs are all resolved") {
    int resolved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = testing::additive(10000, {4, 2, 1}, 1.0, 300 + seed);
        const auto e = misi_first_all(d, std::vector<std::string>{"x1", "x2", "x3"}, "y");
        const auto r = ranked_report(e, 0.01);
        if (r.all_resolved() && r.ordered_labels == std::vector<std::string>{"x1", "x2", "x3"}) ++resolved;
    }
    CHECK(resolved >= 9);
}

TEST_CASE("a monotone transform of the QoI keeps the ranks") {
    int stable = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = testing::additive(5000, {4, 2, 1}, 1.0, 400 + seed);
        IoDataset t;
        for (const auto& c : d.columns()) {
            std::vector<double> v(c.values().begin(), c.values().end());
            if (c.name() == "y")
                for (auto& x : v) x = std::exp(0.2 * x);
            t.add(SampleColumn(c.name(), v), d.role(c.name()));
        }
        const std::vector<std::string> cvs = {"x1", "x2", "x3"};
        std::vector<double> a, b;
        for (const auto& e : misi_first_all(d, cvs, "y")) a.push_back(e.value);
        for (const auto& e : misi_first_all(t, cvs, "y")) b.push_back(e.value);
        if (rank_values(a) == rank_values(b)) ++stable;
    }
    CHECK(stable >= 9);
}

TEST_CASE("type-7 percentiles") {
    CHECK(percentile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(percentile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(percentile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, 0.025) == doctest::Approx(1.25));
    CHECK(percentile({7}, 0.3) == 7.0);
    CHECK_THROWS_AS(percentile({}, 0.5), EmptyInput);
}

TEST_CASE("one replication collapses the intervals onto its ranks") {
    const AdditiveSource src({4, 2, 1}, 1.0);
    PercentileOptions o;
    o.replications = 1;
    o.rows = 1000;
    o.qoi = "y";
    o.cvs = {"x1", "x2", "x3"};
    const auto r = rank_percentiles(src, o);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(r.lower[j] == r.mean_rank[j]);
        CHECK(r.upper[j] == r.mean_rank[j]);
        CHECK(r.mean_rank[j] == r.rank(0, j));
    }
}

TEST_CASE("rank percentiles do not depend on the thread count") {
    const AdditiveSource src({1, 1, 0.5}, 1.0);
    PercentileOptions o;
    o.replications = 12;
    o.rows = 400;
    o.base_seed = 99;
    o.qoi = "y";
    o.cvs = {"x1", "x2", "x3"};
    omp_set_num_threads(1);
    const auto a = rank_percentiles(src, o);
    omp_set_num_threads(4);
    const auto b = rank_percentiles(src, o);
    omp_set_num_threads(1);
    CHECK(a.rank_reps == b.rank_reps);
    CHECK(a.mean_rank == b.mean_rank);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    for (int r : a.rank_reps) CHECK((r >= 1 && r <= 3));

    o.order = 2;
    o.replications = 4;
    const auto pairs = rank_percentiles(src, o);
    CHECK(pairs.labels == std::vector<std::string>{"x1,x2", "x1,x3", "x2,x3"});
}

TEST_CASE("rank percentiles validate their options and name failing replications") {
    const AdditiveSource src({1, 1}, 1.0);
    PercentileOptions o;
    o.rows = 100;
    o.qoi = "y";
    o.cvs = {"x1", "x2"};
    o.replications = 0;
    CHECK_THROWS_AS(rank_percentiles(src, o), InvalidArgument);
    o.replications = 2;
    o.rows = 7;
    CHECK_THROWS_AS(rank_percentiles(src, o), InvalidArgument);
    o.rows = 100;
    o.delta = 1.0;
    CHECK_THROWS_AS(rank_percentiles(src, o), InvalidArgument);
    o.delta = 0.05;
    CHECK_THROWS_WITH_AS(rank_percentiles(FailingSource{}, o), doctest::Contains("replication"), ModelFailure);
}

TEST_CASE("bootstrap source") {
    const auto small = testing::additive(7, {1, 1}, 1.0, 5);
    CHECK_THROWS_AS(BootstrapSource{small}, InsufficientCorpus);
    const auto corpus = testing::additive(50, {1, 1}, 1.0, 6);
    const BootstrapSource src(corpus);
    const auto a = src.draw(3, 200);
    const auto b = src.draw(3, 200);
    CHECK(a.rows() == 200);
    CHECK(a.column("y").values()[17] == b.column("y").values()[17]);
    const auto yc = corpus.column("y").values();
    for (double v : a.column("y").values()) CHECK(std::find(yc.begin(), yc.end(), v) != yc.end());
}

TEST_CASE("bootstrap replicates drop duplicate copies from leave-one-out densities") {
    std::mt19937_64 rng(31);
    const auto corpus = testing::triple(testing::normals(rng, 3000), testing::normals(rng, 3000),
                                        testing::normals(rng, 3000));
    const BootstrapSource src(corpus);
    const auto rep = src.replicate(4, 3000);
    const auto expanded = src.draw(4, 3000);
    double total = 0.0;
    for (double w : rep.weights) total += w;
    CHECK(total == 3000.0);
    CHECK(rep.data.rows() == rep.weights.size());
    CHECK(rep.data.rows() < 2200);

    // duplicates left in the sample inflate their own densities
    const auto naive = misi_first(expanded, "x1", "y");
    EstimatorOptions o;
    o.weights = rep.weights;
    const auto weighted = misi_first(rep.data, "x1", "y", std::nullopt, o);
    INFO("naive ", naive.value, " weighted ", weighted.value);
    CHECK(naive.value > 0.02);
    CHECK(std::abs(weighted.value) < 0.01);
    CHECK(weighted.sample_count == 3000);
}

TEST_CASE("constant columns produce degenerate zero estimates") {
    auto d = testing::additive(300, {1, 1}, 1.0, 7);
    d.add(SampleColumn("x3", std::vector<double>(300, 4.0)), Role::cv);
    const std::vector<std::string> cvs = {"x1", "x2", "x3"};
    const auto e = estimate_indices(d, cvs, "y", 1);
    REQUIRE(e.size() == 3);
    CHECK(e[2].degenerate);
    CHECK(e[2].value == 0.0);
    CHECK(e[2].std_error == 0.0);
    CHECK_FALSE(e[0].degenerate);
    const auto p = estimate_indices(d, cvs, "y", 2);
    CHECK(p.size() == 3);
    CHECK(p[1].degenerate);
    CHECK(p[2].degenerate);
    CHECK_FALSE(p[0].degenerate);
}
