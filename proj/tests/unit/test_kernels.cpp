#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ivselect/kernels.hpp"

namespace {

using ivselect::kernels::KernelTable;

struct Vectors {
    std::vector<double> a, b, w;
};

Vectors random_vectors(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    Vectors v;
    for (std::size_t i = 0; i < n; ++i) {
        v.a.push_back(normal(rng));
        v.b.push_back(normal(rng));
        v.w.push_back(unif(rng));
    }
    return v;
}

void expect_close(double x, double y, double scale) {
    EXPECT_NEAR(x, y, 1e-12 * std::max(1.0, scale));
}

void compare_tables(const KernelTable& ref, const KernelTable& other) {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 67u, 1001u}) {
        const auto v = random_vectors(n, static_cast<unsigned>(n) + 11);
        const double scale = static_cast<double>(n);
        expect_close(ref.dot(v.a.data(), v.b.data(), n), other.dot(v.a.data(), v.b.data(), n), scale);
        expect_close(ref.wdot(v.w.data(), v.a.data(), v.b.data(), n),
                     other.wdot(v.w.data(), v.a.data(), v.b.data(), n), scale);
        expect_close(ref.sum(v.a.data(), n), other.sum(v.a.data(), n), scale);
        expect_close(ref.sqdist(v.a.data(), v.b.data(), n), other.sqdist(v.a.data(), v.b.data(), n), scale);
        std::vector<double> y1 = v.b, y2 = v.b;
        ref.axpy(-0.75, v.a.data(), y1.data(), n);
        other.axpy(-0.75, v.a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) expect_close(y1[i], y2[i], 1.0);
    }
}

}  // namespace

TEST(Kernels, ScalarMatchesNaiveLoops) {
    const auto& s = ivselect::kernels::scalar();
    const auto v = random_vectors(37, 5);
    double dot = 0, wdot = 0, sum = 0, sq = 0;
    for (std::size_t i = 0; i < 37; ++i) {
        dot += v.a[i] * v.b[i];
        wdot += v.w[i] * v.a[i] * v.b[i];
        sum += v.a[i];
        sq += (v.a[i] - v.b[i]) * (v.a[i] - v.b[i]);
    }
    expect_close(s.dot(v.a.data(), v.b.data(), 37), dot, 37);
    expect_close(s.wdot(v.w.data(), v.a.data(), v.b.data(), 37), wdot, 37);
    expect_close(s.sum(v.a.data(), 37), sum, 37);
    expect_close(s.sqdist(v.a.data(), v.b.data(), 37), sq, 37);
}

TEST(Kernels, SimdAgreesWithScalar) {
    const KernelTable* simd = ivselect::kernels::simd();
    if (!simd) GTEST_SKIP() << "no SIMD variant on this CPU";
    compare_tables(ivselect::kernels::scalar(), *simd);
}

TEST(Kernels, ActiveTableIsStable) {
    const auto& a = ivselect::kernels::active();
    const auto& b = ivselect::kernels::active();
    EXPECT_EQ(&a, &b);
    EXPECT_FALSE(a.name.empty());
    compare_tables(ivselect::kernels::scalar(), a);
}
