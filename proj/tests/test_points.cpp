#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "wsvdpu/points.hpp"

using namespace wsvdpu;

namespace {

double van_der_corput(unsigned i, unsigned b) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= b;
        r += f * (i % b);
        i /= b;
    }
    return r;
}

double franke_copy(double x, double y) {
    const double t1 = 0.75 * std::exp(-std::pow(9 * x - 2, 2) / 4 - std::pow(9 * y - 2, 2) / 4);
    const double t2 = 0.75 * std::exp(-std::pow(9 * x + 1, 2) / 49 - (9 * y + 1) / 10);
    const double t3 = 0.5 * std::exp(-std::pow(9 * x - 7, 2) / 4 - std::pow(9 * y - 3, 2) / 4);
    const double t4 = -0.2 * std::exp(-std::pow(9 * x - 4, 2) - std::pow(9 * y - 7, 2));
    return t1 + t2 + t3 + t4;
}

PointCloud numbered_cloud(std::size_t n) {
    PointCloud c = halton(n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
    c.values = v;
    return c;
}

}  // namespace

TEST(Halton, FirstPoints) {
    const auto one = halton(1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_DOUBLE_EQ(one.coords[0].x, 0.5);
    EXPECT_DOUBLE_EQ(one.coords[0].y, 1.0 / 3.0);

    const auto three = halton(3);
    EXPECT_DOUBLE_EQ(three.coords[0].x, 0.5);
    EXPECT_DOUBLE_EQ(three.coords[1].x, 0.25);
    EXPECT_DOUBLE_EQ(three.coords[2].x, 0.75);
}

TEST(Halton, MatchesRadicalInverseOracle) {
    const auto h = halton(500);
    for (unsigned i = 0; i < 500; ++i) {
        EXPECT_NEAR(h.coords[i].x, van_der_corput(i + 1, 2), 1e-15);
        EXPECT_NEAR(h.coords[i].y, van_der_corput(i + 1, 3), 1e-15);
        EXPECT_GT(h.coords[i].x, 0.0);
        EXPECT_LT(h.coords[i].x, 1.0);
        EXPECT_GT(h.coords[i].y, 0.0);
        EXPECT_LT(h.coords[i].y, 1.0);
    }
}

TEST(Halton, StartIndexZeroIncludesOrigin) {
    const auto h = halton(4, 0);
    EXPECT_EQ(h.coords[0], (Point{0.0, 0.0}));
    EXPECT_EQ(h.coords[1], halton(1).coords[0]);
}

TEST(EvalGrid, Layout) {
    const auto g2 = eval_grid(2);
    ASSERT_EQ(g2.size(), 4u);
    const std::set<std::pair<double, double>> want{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    std::set<std::pair<double, double>> got;
    for (const auto& p : g2.coords) got.insert({p.x, p.y});
    EXPECT_EQ(got, want);

    const auto g3 = eval_grid(3);
    EXPECT_NE(std::find(g3.coords.begin(), g3.coords.end(), Point{0.5, 0.5}), g3.coords.end());
    EXPECT_EQ(eval_grid(40).size(), 1600u);
}

TEST(Franke, KnownValues) {
    const double origin = 0.75 * std::exp(-2.0) + 0.75 * std::exp(-1.0 / 49 - 1.0 / 10) +
                          0.5 * std::exp(-29.0 / 2) - 0.2 * std::exp(-65.0);
    EXPECT_NEAR(franke(0.0, 0.0), origin, 1e-15);
    const double x = 4.0 / 9.0, y = 7.0 / 9.0;
    const double rest = 0.75 * std::exp(-std::pow(9 * x - 2, 2) / 4 - std::pow(9 * y - 2, 2) / 4) +
                        0.75 * std::exp(-std::pow(9 * x + 1, 2) / 49 - (9 * y + 1) / 10) +
                        0.5 * std::exp(-std::pow(9 * x - 7, 2) / 4 - std::pow(9 * y - 3, 2) / 4);
    EXPECT_NEAR(franke(x, y), rest - 0.2, 1e-15);
}

TEST(Franke, DuplicateImplementation) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 5; ++i) {
        const double x = u(rng), y = u(rng);
        EXPECT_NEAR(franke(x, y), franke_copy(x, y), 1e-15);
    }
}

TEST(Xyz, RescalesTwoPointBox) {
    std::istringstream in("0 0 1\n2 2 3\n");
    const auto c = load_xyz(in);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.coords[0], (Point{0, 0}));
    EXPECT_EQ(c.coords[1], (Point{1, 1}));
    EXPECT_EQ(*c.values, (std::vector<double>{1, 3}));
}

TEST(Xyz, CommentsAndBlankLines) {
    std::istringstream in("# header\n\n0 0 1  # trailing\n4 2 5\n");
    const auto c = load_xyz(in);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.coords[1], (Point{1, 1}));
    EXPECT_DOUBLE_EQ(c.original_box.xmax, 4.0);
}

TEST(Xyz, Errors) {
    std::istringstream dup("0 0 1\n0 0 2\n");
    EXPECT_THROW(load_xyz(dup), DuplicatePoints);
    std::istringstream empty("# nothing\n");
    EXPECT_THROW(load_xyz(empty), EmptyFile);
    std::istringstream bad("0 0 1\n1 x 2\n");
    try {
        load_xyz(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream extra("0 0 1 7\n");
    EXPECT_THROW(load_xyz(extra), ParseError);
}

TEST(Xyz, RoundTripKeepsOriginalFrame) {
    std::istringstream in("100 -5 0.25\n300 15 1.5\n250 10 -2\n");
    const auto c = load_xyz(in);
    std::ostringstream out;
    save_xyz(out, c);
    std::istringstream again(out.str());
    const auto d = load_xyz(again);
    ASSERT_EQ(d.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_NEAR(d.coords[i].x, c.coords[i].x, 1e-15);
        EXPECT_NEAR(d.coords[i].y, c.coords[i].y, 1e-15);
        EXPECT_EQ((*d.values)[i], (*c.values)[i]);
    }
    const auto p = c.to_unit({250, 10});
    EXPECT_NEAR(p.x, 0.75, 1e-15);
    EXPECT_NEAR(p.y, 0.75, 1e-15);
    const auto q = c.to_original(p);
    EXPECT_NEAR(q.x, 250.0, 1e-12);
}

TEST(Holdout, RejectsBadSizes) {
    const auto c = numbered_cloud(10);
    EXPECT_THROW(split_holdout(c, 10, 0), InvalidSplit);
    EXPECT_THROW(split_holdout(c, 0, 0), InvalidSplit);
    EXPECT_THROW(split_holdout(halton(10), 3, 0), InvalidSplit);
}

TEST(Holdout, DeterministicPartition) {
    const auto c = numbered_cloud(500);
    const auto a = split_holdout(c, 37, 9);
    const auto b = split_holdout(c, 37, 9);
    EXPECT_EQ(a.test_indices, b.test_indices);
    EXPECT_EQ(a.train_indices, b.train_indices);
    EXPECT_NE(a.test_indices, split_holdout(c, 37, 10).test_indices);

    std::vector<std::size_t> all = a.test_indices;
    all.insert(all.end(), a.train_indices.begin(), a.train_indices.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    EXPECT_TRUE(std::is_sorted(a.test_indices.begin(), a.test_indices.end()));
}

TEST(Holdout, LargeCloudSizes) {
    const auto c = numbered_cloud(8345);
    const auto s = split_holdout(c, 90, 1);
    EXPECT_EQ(s.train_indices.size(), 8255u);
    EXPECT_EQ(s.test_indices.size(), 90u);
    const auto train = subset(c, s.train_indices);
    EXPECT_EQ(train.size(), 8255u);
    EXPECT_EQ((*train.values)[0], static_cast<double>(s.train_indices[0]));
}
