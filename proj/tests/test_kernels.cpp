#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "wsvdpu/kernels.hpp"

using namespace wsvdpu;

namespace {

// Independent copies of the kernel table, written against the shape parameter
// directly.
double reference_kernel(KernelFamily k, double e, double r) {
    const double t = e * r;
    switch (k) {
        case KernelFamily::GA: return std::exp(-(e * e) * (r * r));
        case KernelFamily::IMQ: return std::pow(1.0 + t * t, -0.5);
        case KernelFamily::M6: return std::exp(-t) * (std::pow(t, 3) + 6 * t * t + 15 * t + 15);
        case KernelFamily::M4: return std::exp(-t) * (t * t + 3 * t + 3);
        case KernelFamily::W6:
            return t >= 1 ? 0.0 : std::pow(1 - t, 8) * (32 * std::pow(t, 3) + 25 * t * t + 8 * t + 1);
        case KernelFamily::W4: return t >= 1 ? 0.0 : std::pow(1 - t, 6) * (35 * t * t + 18 * t + 3);
    }
    return 0.0;
}

}  // namespace

TEST(Kernel, ValueAtZero) {
    const double expected[] = {1, 1, 15, 3, 1, 3};
    for (std::size_t i = 0; i < all_kernel_families.size(); ++i) {
        const Kernel k(all_kernel_families[i], 0.7);
        EXPECT_DOUBLE_EQ(k.eval(0.0), expected[i]) << to_string(all_kernel_families[i]);
        EXPECT_DOUBLE_EQ(k.value_at_zero(), expected[i]);
    }
}

TEST(Kernel, PointValues) {
    EXPECT_DOUBLE_EQ(Kernel(KernelFamily::GA, 3.0).eval(0.0), 1.0);
    EXPECT_NEAR(Kernel(KernelFamily::GA, 2.0).eval(0.5), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(Kernel(KernelFamily::M4, 1.0).eval(1.0), 7.0 * std::exp(-1.0), 1e-14);
    EXPECT_EQ(Kernel(KernelFamily::W6, 2.0).eval(0.5), 0.0);
    EXPECT_EQ(Kernel(KernelFamily::W4, 2.0).eval(0.75), 0.0);
}

TEST(Kernel, MatchesReferenceFormulas) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (auto family : all_kernel_families) {
        for (int i = 0; i < 200; ++i) {
            const double e = 0.05 + 3.0 * u(rng);
            const double r = u(rng);
            const double want = reference_kernel(family, e, r);
            EXPECT_NEAR(Kernel(family, e).eval(r), want, 1e-13 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST(Kernel, MonotoneDecreasing) {
    for (auto family : all_kernel_families) {
        const Kernel k(family, 1.3);
        double prev = k.eval(0.0);
        for (int i = 1; i <= 100; ++i) {
            const double v = k.eval(i * 0.01);
            EXPECT_LE(v, prev) << to_string(family) << " at r=" << i * 0.01;
            EXPECT_GE(v, 0.0);
            prev = v;
        }
    }
}

TEST(Kernel, Support) {
    EXPECT_DOUBLE_EQ(Kernel(KernelFamily::W6, 4.0).support_radius(), 0.25);
    EXPECT_TRUE(Kernel(KernelFamily::W4, 4.0).compactly_supported());
    EXPECT_FALSE(Kernel(KernelFamily::GA, 4.0).compactly_supported());
    EXPECT_TRUE(std::isinf(Kernel(KernelFamily::M6, 4.0).support_radius()));
}

TEST(Kernel, RejectsBadShape) {
    EXPECT_THROW(Kernel(KernelFamily::GA, 0.0), InvalidArgument);
    EXPECT_THROW(Kernel(KernelFamily::GA, -1.0), InvalidArgument);
    EXPECT_THROW(Kernel(KernelFamily::GA, NAN), InvalidArgument);
}

TEST(Kernel, NamesRoundTrip) {
    for (auto family : all_kernel_families) {
        EXPECT_EQ(parse_kernel_family(to_string(family)), family);
    }
    EXPECT_EQ(parse_kernel_family("W6"), KernelFamily::W6);
    EXPECT_THROW(parse_kernel_family("tps"), InvalidArgument);
}

TEST(KernelMatrix, SinglePoint) {
    const std::vector<Point> p{{0.3, 0.4}};
    const auto a = kernel_matrix(Kernel(KernelFamily::M6, 2.0), p);
    ASSERT_EQ(a.rows(), 1);
    EXPECT_EQ(a(0, 0), 15.0);
}

TEST(KernelMatrix, SupportBoundaryIsZero) {
    const std::vector<Point> p{{0.0, 0.0}, {0.5, 0.0}};
    const auto a = kernel_matrix(Kernel(KernelFamily::W4, 2.0), p);
    EXPECT_EQ(a(0, 1), 0.0);
    EXPECT_EQ(a(1, 0), 0.0);
    EXPECT_EQ(a(0, 0), 3.0);
}

TEST(KernelMatrix, BruteForceAndSymmetry) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto family : all_kernel_families) {
        std::vector<Point> p(12);
        for (auto& x : p) x = {u(rng), u(rng)};
        const Kernel k(family, 1.7);
        const auto a = kernel_matrix(k, p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double r = std::hypot(p[i].x - p[j].x, p[i].y - p[j].y);
                EXPECT_NEAR(a(i, j), reference_kernel(family, 1.7, r), 1e-13 * k.value_at_zero());
                EXPECT_EQ(a(i, j), a(j, i));
            }
        }
    }
}

TEST(KernelMatrix, Duplicates) {
    const std::vector<Point> p{{0.1, 0.2}, {0.5, 0.5}, {0.1, 0.2}};
    EXPECT_THROW(kernel_matrix(Kernel(KernelFamily::GA, 1.0), p), DuplicatePoints);
}

TEST(EvaluationMatrix, MatchesKernel) {
    const std::vector<Point> y{{0.0, 0.0}, {1.0, 1.0}};
    const std::vector<Point> x{{0.5, 0.0}, {0.0, 0.5}, {1.0, 0.0}};
    const Kernel k(KernelFamily::IMQ, 2.0);
    const auto e = evaluation_matrix(k, y, x);
    ASSERT_EQ(e.rows(), 2);
    ASSERT_EQ(e.cols(), 3);
    EXPECT_DOUBLE_EQ(e(0, 0), 1.0 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(e(1, 2), 1.0 / std::sqrt(5.0));
}
