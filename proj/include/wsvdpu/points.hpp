#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "point.hpp"

namespace wsvdpu {

/// Axis-aligned box of the original (pre-rescale) coordinates.
struct BoundingBox {
    double xmin = 0.0, xmax = 1.0;
    double ymin = 0.0, ymax = 1.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};

/// Points in the unit square with optional sample values.
struct PointCloud {
    std::vector<Point> coords;
    std::optional<std::vector<double>> values;
    BoundingBox original_box{};

    std::size_t size() const { return coords.size(); }
    bool has_values() const { return values.has_value(); }

    /// Maps a unit-square point back to the original coordinate frame.
    Point to_original(const Point& p) const {
        const double w = original_box.width() > 0.0 ? original_box.width() : 1.0;
        const double h = original_box.height() > 0.0 ? original_box.height() : 1.0;
        return {original_box.xmin + p.x * w, original_box.ymin + p.y * h};
    }

    /// Maps an original-frame point into this cloud's unit square (no clamping).
    Point to_unit(const Point& p) const {
        const double w = original_box.width() > 0.0 ? original_box.width() : 1.0;
        const double h = original_box.height() > 0.0 ? original_box.height() : 1.0;
        return {(p.x - original_box.xmin) / w, (p.y - original_box.ymin) / h};
    }
};

struct HoldoutSplit {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Van der Corput radical inverse of `index` in `base`.
inline double radical_inverse(std::uint64_t index, unsigned base) {
    const double inv_base = 1.0 / base;
    double factor = inv_base;
    double result = 0.0;
    while (index > 0) {
        result += static_cast<double>(index % base) * factor;
        index /= base;
        factor *= inv_base;
    }
    return result;
}

/// n consecutive points of the 2D Halton sequence (bases 2 and 3) starting at
/// `first_index`. Index 0 is the origin; the benchmark node sets start there.
inline PointCloud halton(std::size_t n, std::uint64_t first_index = 1) {
    if (n == 0) throw InvalidArgument("halton: n must be positive");
    PointCloud cloud;
    cloud.coords.reserve(n);
    for (std::uint64_t i = first_index; i < first_index + n; ++i) {
        cloud.coords.push_back({radical_inverse(i, 2), radical_inverse(i, 3)});
    }
    return cloud;
}

/// side x side equispaced grid on [0,1]^2, endpoints included, x-major order.
inline PointCloud eval_grid(std::size_t side) {
    if (side < 2) throw InvalidArgument("eval_grid: side must be at least 2");
    PointCloud cloud;
    cloud.coords.reserve(side * side);
    const double h = 1.0 / static_cast<double>(side - 1);
    for (std::size_t i = 0; i < side; ++i) {
        const double x = i + 1 == side ? 1.0 : static_cast<double>(i) * h;
        for (std::size_t j = 0; j < side; ++j) {
            const double y = j + 1 == side ? 1.0 : static_cast<double>(j) * h;
            cloud.coords.push_back({x, y});
        }
    }
    return cloud;
}

/// Franke's bivariate test function.
inline double franke(double x1, double x2) {
    const double a = 9.0 * x1;
    const double b = 9.0 * x2;
    return 0.75 * std::exp(-((a - 2.0) * (a - 2.0) + (b - 2.0) * (b - 2.0)) / 4.0) +
           0.75 * std::exp(-(a + 1.0) * (a + 1.0) / 49.0 - (b + 1.0) / 10.0) +
           0.5 * std::exp(-((a - 7.0) * (a - 7.0) + (b - 3.0) * (b - 3.0)) / 4.0) -
           0.2 * std::exp(-(a - 4.0) * (a - 4.0) - (b - 7.0) * (b - 7.0));
}

inline std::vector<double> franke_values(const std::vector<Point>& coords) {
    std::vector<double> out;
    out.reserve(coords.size());
    for (const auto& p : coords) out.push_back(franke(p.x, p.y));
    return out;
}

inline PointCloud with_franke_values(PointCloud cloud) {
    cloud.values = franke_values(cloud.coords);
    return cloud;
}

namespace detail {

struct PointHash {
    std::size_t operator()(const Point& p) const noexcept {
        const std::size_t hx = std::hash<double>{}(p.x);
        const std::size_t hy = std::hash<double>{}(p.y);
        return hx ^ (hy + 0x9e3779b97f4a7c15ULL + (hx << 6) + (hx >> 2));
    }
};

inline void reject_duplicates(const std::vector<Point>& coords) {
    std::unordered_set<Point, PointHash> seen;
    seen.reserve(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (!seen.insert(coords[i]).second) {
            throw DuplicatePoints("point " + std::to_string(i) + " repeats an earlier point");
        }
    }
}

}  // namespace detail

/// Rescales raw coordinates per axis onto [0,1]^2 and records the original box.
/// A degenerate axis (zero extent) maps to 0.
inline PointCloud rescale_to_unit_square(const std::vector<Point>& raw, std::vector<double> values) {
    PointCloud cloud;
    BoundingBox box{raw.front().x, raw.front().x, raw.front().y, raw.front().y};
    for (const auto& p : raw) {
        box.xmin = std::min(box.xmin, p.x);
        box.xmax = std::max(box.xmax, p.x);
        box.ymin = std::min(box.ymin, p.y);
        box.ymax = std::max(box.ymax, p.y);
    }
    cloud.original_box = box;
    cloud.coords.reserve(raw.size());
    for (const auto& p : raw) {
        const double x = box.width() > 0.0 ? (p.x - box.xmin) / box.width() : 0.0;
        const double y = box.height() > 0.0 ? (p.y - box.ymin) / box.height() : 0.0;
        cloud.coords.push_back({std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)});
    }
    detail::reject_duplicates(cloud.coords);
    cloud.values = std::move(values);
    return cloud;
}

struct RawXyz {
    std::vector<Point> coords;
    std::vector<double> values;
};

/// Parses "x y f" lines without rescaling. Blank lines and '#' comments are skipped.
inline RawXyz read_xyz_raw(std::istream& in) {
    RawXyz data;
    auto& raw = data.coords;
    auto& values = data.values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        double x, y, f;
        if (!(fields >> x >> y >> f)) throw ParseError(line_no, "expected three numbers 'x y f'");
        std::string extra;
        if (fields >> extra) throw ParseError(line_no, "unexpected trailing field '" + extra + "'");
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(f)) {
            throw ParseError(line_no, "non-finite value");
        }
        raw.push_back({x, y});
        values.push_back(f);
    }
    if (raw.empty()) throw EmptyFile("no data lines");
    return data;
}

/// Reads "x y f" lines and rescales the coordinates onto [0,1]^2 per axis.
inline PointCloud load_xyz(std::istream& in) {
    auto data = read_xyz_raw(in);
    detail::reject_duplicates(data.coords);
    return rescale_to_unit_square(data.coords, std::move(data.values));
}

inline PointCloud load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EmptyFile("cannot open '" + path + "'");
    return load_xyz(in);
}

/// Writes "%.17g %.17g %.17g" lines in the cloud's original coordinate frame.
inline void save_xyz(std::ostream& out, const PointCloud& cloud) {
    if (!cloud.values || cloud.values->size() != cloud.size()) {
        throw LengthMismatch("save_xyz needs one value per point");
    }
    char buf[96];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point p = cloud.to_original(cloud.coords[i]);
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, (*cloud.values)[i]);
        out << buf;
    }
}

inline void save_xyz(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    save_xyz(out, cloud);
}

/// SplitMix64 generator; portable across implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % bound;
    }

private:
    std::uint64_t state_;
};

/// Selects s test indices by a partial Fisher-Yates shuffle driven by SplitMix64(seed).
/// Both index lists are returned sorted ascending.
inline HoldoutSplit split_holdout(const PointCloud& cloud, std::size_t s, std::uint64_t seed) {
    const std::size_t n = cloud.size();
    if (!cloud.has_values()) throw InvalidSplit("cloud has no values");
    if (s == 0 || s >= n) {
        throw InvalidSplit("holdout size " + std::to_string(s) + " must be in [1, " + std::to_string(n) + ")");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    HoldoutSplit split;
    split.test_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s));
    split.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(s), perm.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    std::sort(split.train_indices.begin(), split.train_indices.end());
    return split;
}

/// Sub-cloud restricted to `indices` (values carried along, box preserved).
inline PointCloud subset(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
    PointCloud out;
    out.original_box = cloud.original_box;
    out.coords.reserve(indices.size());
    for (auto i : indices) out.coords.push_back(cloud.coords.at(i));
    if (cloud.values) {
        std::vector<double> v;
        v.reserve(indices.size());
        for (auto i : indices) v.push_back(cloud.values->at(i));
        out.values = std::move(v);
    }
    return out;
}

}  // namespace wsvdpu
