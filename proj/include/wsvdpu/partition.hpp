#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "point.hpp"

namespace wsvdpu {

/// Circular PU patches of common radius centred on an equispaced grid.
struct PuCover {
    std::vector<Point> centres;
    std::vector<bool> active;
    double radius = 0.0;
    std::size_t per_side = 0;  ///< centres per grid side; d = per_side^2

    std::size_t size() const { return centres.size(); }

    std::size_t active_count() const {
        return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
    }
};

/// Centre grid with floor(sqrt(N)/2) centres per side (so N/d is about 4) and
/// radius sqrt(2/d). Fewer than 4 points get one patch centred at (0.5, 0.5).
inline PuCover build_cover(std::size_t n_points) {
    if (n_points == 0) throw InvalidArgument("build_cover: no points");
    auto g = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_points)) / 2.0));
    // guard the floor against sqrt rounding just below an exact square
    while ((g + 1) * (g + 1) * 4 <= n_points) ++g;
    while (g > 1 && g * g * 4 > n_points) --g;
    g = std::max<std::size_t>(g, 1);

    PuCover cover;
    cover.per_side = g;
    const std::size_t d = g * g;
    cover.radius = std::sqrt(2.0 / static_cast<double>(d));
    cover.centres.reserve(d);
    for (std::size_t i = 0; i < g; ++i) {
        const double x = g == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(g - 1);
        for (std::size_t j = 0; j < g; ++j) {
            const double y = g == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(g - 1);
            cover.centres.push_back({x, y});
        }
    }
    cover.active.assign(d, true);
    return cover;
}

/// q x q grid of square blocks tiling [0,1]^2. Blocks are numbered bottom to
/// top within a column, columns left to right: k = (i-1)q + j (1-based).
/// Cells are half-open [a,b); the last cell on each axis is closed.
class BlockPartition {
public:
    BlockPartition() = default;

    BlockPartition(std::span<const Point> points, double delta) {
        if (!(delta > 0.0)) throw InvalidArgument("build_blocks: radius must be positive");
        q_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(1.0 / delta)));
        delta_ = delta;
        block_of_point_.resize(points.size());

        // counting sort by block
        std::vector<std::size_t> counts(q_ * q_ + 1, 0);
        for (std::size_t p = 0; p < points.size(); ++p) {
            const std::size_t b = block_index(column_of(points[p].x), row_of(points[p].y));
            block_of_point_[p] = b;
            ++counts[b + 1];
        }
        for (std::size_t b = 0; b < q_ * q_; ++b) counts[b + 1] += counts[b];
        offsets_ = counts;
        sorted_.resize(points.size());
        for (std::size_t p = 0; p < points.size(); ++p) sorted_[counts[block_of_point_[p]]++] = p;
    }

    std::size_t q() const noexcept { return q_; }
    double width() const noexcept { return 1.0 / static_cast<double>(q_); }
    std::size_t point_count() const noexcept { return sorted_.size(); }

    /// 0-based column (left to right) of coordinate x.
    std::size_t column_of(double x) const noexcept { return cell_of(x); }
    /// 0-based row (bottom to top) of coordinate y.
    std::size_t row_of(double y) const noexcept { return cell_of(y); }

    /// 0-based block index from 0-based column/row; the 1-based number is this + 1.
    std::size_t block_index(std::size_t column, std::size_t row) const noexcept {
        return column * q_ + row;
    }

    std::size_t block_of_point(std::size_t p) const { return block_of_point_.at(p); }

    std::span<const std::size_t> points_in_block(std::size_t block) const {
        return {sorted_.data() + offsets_.at(block), offsets_.at(block + 1) - offsets_.at(block)};
    }

    /// Half-width (in blocks) of the neighbourhood scanned for a query of `radius`.
    std::size_t ring_for(double radius) const noexcept {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(radius * static_cast<double>(q_))));
    }

    /// Indices of points within the closed disc (centre, radius), ascending.
    /// Only blocks in the square neighbourhood of the centre's block are scanned.
    std::vector<std::size_t> points_in_patch(std::span<const Point> points, const Point& centre,
                                             double radius) const {
        std::vector<std::size_t> out;
        for_each_in_patch(points, centre, radius, [&](std::size_t p, double) { out.push_back(p); });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Calls fn(index, distance) for every point in the closed disc, unordered.
    template <class Fn>
    void for_each_in_patch(std::span<const Point> points, const Point& centre, double radius, Fn&& fn) const {
        if (q_ == 0) return;
        const auto ring = static_cast<std::ptrdiff_t>(ring_for(radius));
        const auto c0 = static_cast<std::ptrdiff_t>(column_of(centre.x));
        const auto r0 = static_cast<std::ptrdiff_t>(row_of(centre.y));
        const auto last = static_cast<std::ptrdiff_t>(q_) - 1;
        for (auto c = std::max<std::ptrdiff_t>(0, c0 - ring); c <= std::min(last, c0 + ring); ++c) {
            for (auto r = std::max<std::ptrdiff_t>(0, r0 - ring); r <= std::min(last, r0 + ring); ++r) {
                for (auto p : points_in_block(block_index(static_cast<std::size_t>(c), static_cast<std::size_t>(r)))) {
                    const double dist = distance(points[p], centre);
                    if (dist <= radius) fn(p, dist);
                }
            }
        }
    }

private:
    std::size_t cell_of(double v) const noexcept {
        if (!(v > 0.0)) return 0;
        const auto cell = static_cast<std::size_t>(std::floor(v * static_cast<double>(q_)));
        return std::min(cell, q_ - 1);
    }

    std::size_t q_ = 0;
    double delta_ = 0.0;
    std::vector<std::size_t> block_of_point_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> sorted_;
};

inline BlockPartition build_blocks(std::span<const Point> points, double delta) {
    return BlockPartition(points, delta);
}

/// Marks patches containing no data point inactive. Throws CoverageGap if a
/// point is left outside every active patch.
inline PuCover deactivate_empty(PuCover cover, const BlockPartition& partition, std::span<const Point> points) {
    if (partition.point_count() != points.size()) {
        throw InvalidArgument("deactivate_empty: partition built over a different point set");
    }
    std::vector<bool> covered(points.size(), false);
    for (std::size_t j = 0; j < cover.size(); ++j) {
        if (!cover.active[j]) continue;
        bool any = false;
        partition.for_each_in_patch(points, cover.centres[j], cover.radius, [&](std::size_t p, double) {
            any = true;
            covered[p] = true;
        });
        cover.active[j] = any;
    }
    const auto gap = std::find(covered.begin(), covered.end(), false);
    if (gap != covered.end()) {
        throw CoverageGap("point " + std::to_string(gap - covered.begin()) + " lies in no active patch");
    }
    return cover;
}

}  // namespace wsvdpu
