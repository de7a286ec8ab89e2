#pragma once

#include "misi/dataset.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::vector<double> normals(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> n01;
    std::vector<double> out(n);
    for (auto& x : out) x = n01(rng);
    return out;
}

/// (x, y) standard bivariate normal with correlation rho; x is a CV, y a QoI.
inline misi::IoDataset gaussian_pair(std::size_t m, double rho, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto a = normals(rng, m);
    const auto b = normals(rng, m);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = rho * a[i] + std::sqrt(1.0 - rho * rho) * b[i];
    misi::IoDataset d;
    d.add(misi::SampleColumn("x", a), misi::Role::cv);
    d.add(misi::SampleColumn("y", y), misi::Role::qoi);
    return d;
}

inline double gaussian_mi(double rho) { return -0.5 * std::log(1.0 - rho * rho); }

/// Columns x1, x2 (CVs) and y (QoI) from explicit vectors.
inline misi::IoDataset triple(std::vector<double> x1, std::vector<double> x2, std::vector<double> y) {
    misi::IoDataset d;
    d.add(misi::SampleColumn("x1", std::move(x1)), misi::Role::cv);
    d.add(misi::SampleColumn("x2", std::move(x2)), misi::Role::cv);
    d.add(misi::SampleColumn("y", std::move(y)), misi::Role::qoi);
    return d;
}

/// Y = sum a_i X_i + sigma eps with iid standard normal inputs x1..xp.
inline misi::IoDataset additive(std::size_t m, const std::vector<double>& a, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    misi::IoDataset d;
    std::vector<double> y(m, 0.0);
    for (std::size_t j = 0; j < a.size(); ++j) {
        const auto x = normals(rng, m);
        for (std::size_t i = 0; i < m; ++i) y[i] += a[j] * x[i];
        d.add(misi::SampleColumn("x" + std::to_string(j + 1), x), misi::Role::cv);
    }
    const auto e = normals(rng, m);
    for (std::size_t i = 0; i < m; ++i) y[i] += sigma * e[i];
    d.add(misi::SampleColumn("y", y), misi::Role::qoi);
    return d;
}

}  // namespace testing
