#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "wsvdpu/partition.hpp"
#include "wsvdpu/points.hpp"

using namespace wsvdpu;

namespace {

std::vector<std::size_t> brute_force(const std::vector<Point>& pts, const Point& c, double r) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (std::hypot(pts[i].x - c.x, pts[i].y - c.y) <= r) out.push_back(i);
    }
    return out;
}

}  // namespace

TEST(Cover, Sizes) {
    const auto c = build_cover(4225);
    EXPECT_EQ(c.per_side, 32u);
    EXPECT_EQ(c.size(), 1024u);
    EXPECT_NEAR(c.radius, std::sqrt(2.0) / 32.0, 1e-15);
    EXPECT_NEAR(c.radius, 0.044194, 1e-6);

    const auto s = build_cover(16);
    EXPECT_EQ(s.size(), 4u);
    EXPECT_NEAR(s.radius, std::sqrt(0.5), 1e-15);
}

TEST(Cover, RadiusIdentity) {
    for (std::size_t n : {1u, 4u, 15u, 16u, 17u, 289u, 1000u, 4225u, 16641u, 66049u}) {
        const auto c = build_cover(n);
        EXPECT_NEAR(static_cast<double>(c.size()) * c.radius * c.radius, 2.0, 1e-12) << n;
        EXPECT_EQ(c.size(), c.per_side * c.per_side);
        const auto g = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)) / 2.0));
        EXPECT_EQ(c.per_side, std::max<std::size_t>(g, 1)) << n;
    }
}

TEST(Cover, GridCorners) {
    const auto c = build_cover(4225);
    EXPECT_EQ(c.centres.front(), (Point{0.0, 0.0}));
    EXPECT_EQ(c.centres.back(), (Point{1.0, 1.0}));
    EXPECT_THROW(build_cover(0), InvalidArgument);
}

TEST(Blocks, Numbering) {
    const std::vector<Point> pts{{0.6, 0.3}, {1.0, 1.0}, {0.0, 0.0}};
    const auto b = build_blocks(pts, 0.6);
    EXPECT_EQ(b.q(), 2u);
    EXPECT_EQ(b.column_of(0.6), 1u);
    EXPECT_EQ(b.row_of(0.3), 0u);
    EXPECT_EQ(b.block_of_point(0) + 1, 3u);
    EXPECT_EQ(b.block_of_point(1) + 1, 4u);
    EXPECT_EQ(b.block_of_point(2) + 1, 1u);

    const auto one = build_blocks(pts, 1.0);
    EXPECT_EQ(one.q(), 1u);
    EXPECT_EQ(one.points_in_block(0).size(), 3u);
}

TEST(Blocks, EveryPointInItsBlock) {
    const auto h = halton(3000);
    const auto b = build_blocks(h.coords, 0.07);
    std::size_t total = 0;
    for (std::size_t k = 0; k < b.q() * b.q(); ++k) {
        for (auto p : b.points_in_block(k)) {
            EXPECT_EQ(b.block_of_point(p), k);
            const double lo_x = static_cast<double>(k / b.q()) * b.width();
            const double lo_y = static_cast<double>(k % b.q()) * b.width();
            EXPECT_GE(h.coords[p].x, lo_x - 1e-15);
            EXPECT_GE(h.coords[p].y, lo_y - 1e-15);
            ++total;
        }
    }
    EXPECT_EQ(total, h.size());
}

TEST(Blocks, SearchMatchesBruteForce) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> pts(4000);
    for (auto& p : pts) p = {u(rng), u(rng)};
    pts[0] = {0.0, 0.0};
    pts[1] = {1.0, 1.0};
    pts[2] = {1.0, 0.0};
    const double delta = build_cover(pts.size()).radius;
    const auto b = build_blocks(pts, delta);
    for (int i = 0; i < 1000; ++i) {
        const Point c{u(rng), u(rng)};
        const double r = i % 3 == 0 ? delta : delta * (0.2 + 1.5 * u(rng));
        EXPECT_EQ(b.points_in_patch(pts, c, r), brute_force(pts, c, r)) << "query " << i;
    }
}

TEST(Blocks, EdgeQueries) {
    const auto h = halton(200);
    const auto b = build_blocks(h.coords, 0.2);
    EXPECT_TRUE(b.points_in_patch(h.coords, {0.5, 0.5}, 1e-6).empty());
    const auto whole = build_blocks(h.coords, 1.0);
    EXPECT_EQ(whole.points_in_patch(h.coords, {0.5, 0.5}, 1.0).size(), 200u);
}

TEST(Deactivate, UniformDataKeepsEverything) {
    const auto h = halton(4225);
    auto cover = build_cover(h.size());
    const auto b = build_blocks(h.coords, cover.radius);
    cover = deactivate_empty(cover, b, h.coords);
    for (std::size_t j = 0; j < cover.size(); ++j) {
        EXPECT_EQ(cover.active[j], !brute_force(h.coords, cover.centres[j], cover.radius).empty());
    }
    EXPECT_EQ(cover.active_count(), 1024u);
}

TEST(Deactivate, ClusteredData) {
    std::vector<Point> pts;
    for (const auto& p : halton(400).coords) pts.push_back({0.4 * p.x, 0.4 * p.y});
    auto cover = build_cover(pts.size());
    const auto b = build_blocks(pts, cover.radius);
    cover = deactivate_empty(cover, b, pts);
    EXPECT_FALSE(cover.active.back());
    for (std::size_t j = 0; j < cover.size(); ++j) {
        EXPECT_EQ(cover.active[j], !brute_force(pts, cover.centres[j], cover.radius).empty());
    }
}

TEST(Deactivate, SinglePoint) {
    const std::vector<Point> pts{{0.5, 0.5}};
    PuCover cover = build_cover(16);
    const auto b = build_blocks(pts, cover.radius);
    cover = deactivate_empty(cover, b, pts);
    for (std::size_t j = 0; j < cover.size(); ++j) {
        EXPECT_EQ(cover.active[j], distance(cover.centres[j], pts[0]) <= cover.radius);
    }
}

TEST(Deactivate, Gap) {
    PuCover cover = build_cover(4225);
    const std::vector<Point> pts{{0.5, 0.5}, {0.01, 0.99}};
    for (std::size_t j = 0; j < cover.size(); ++j) cover.active[j] = distance(cover.centres[j], pts[0]) < 0.1;
    const auto b = build_blocks(pts, cover.radius);
    EXPECT_THROW(deactivate_empty(cover, b, pts), CoverageGap);
}
