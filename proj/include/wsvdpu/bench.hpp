#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "kernels.hpp"
#include "partition.hpp"
#include "points.hpp"
#include "pu.hpp"

namespace wsvdpu {

inline double rmse(std::span<const double> predicted, std::span<const double> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw LengthMismatch("rmse: " + std::to_string(predicted.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " truth values");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - predicted[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(truth.size()));
}

inline double rrmse(std::span<const double> predicted, std::span<const double> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw LengthMismatch("rrmse: " + std::to_string(predicted.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " truth values");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0) throw ZeroTruthValue(i);
        const double d = (truth[i] - predicted[i]) / truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(truth.size()));
}

/// n log-spaced values from lo to hi inclusive.
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidArgument("log_space: need 0 < lo < hi and n >= 2");
    std::vector<double> out(n);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

/// Halton nodes (first index 0) with Franke values: the standard test set.
inline PointCloud benchmark_nodes(std::size_t n) { return with_franke_values(halton(n, 0)); }

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw LengthMismatch("loglog_slope needs two or more pairs");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct SweepResult {
    std::vector<double> epsilons;
    std::vector<double> rmse_wsvd;
    std::vector<double> rmse_standard;  ///< NaN where standard PU broke down (or was skipped)
    std::vector<double> mean_m;
    std::vector<double> max_m;
    std::vector<double> fit_seconds;

    std::size_t size() const { return epsilons.size(); }
};

struct SweepOptions {
    FitOptions fit{};
    bool include_standard = true;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// RMSE of a model on eval points; NaN if any prediction is non-finite.
inline double model_rmse(const PuModel& model, std::span<const Point> eval_points, std::span<const double> truth) {
    const auto batch = model.evaluate_batch(eval_points);
    for (double v : batch.values) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    }
    return rmse(batch.values, truth);
}

}  // namespace detail

/// RMSE of the stable and the standard PU interpolants over n_eps log-spaced
/// shape parameters in [eps_lo, eps_hi]. Standard-PU breakdowns become NaN.
inline SweepResult epsilon_sweep(const PointCloud& points, KernelFamily family, double eps_lo, double eps_hi,
                                 std::size_t n_eps, double tau, std::span<const Point> eval_points,
                                 std::span<const double> truth, SweepOptions options = {}) {
    if (eval_points.size() != truth.size()) throw LengthMismatch("epsilon_sweep: eval points vs truth");
    options.fit.tau = tau;
    SweepResult out;
    out.epsilons = log_space(eps_lo, eps_hi, n_eps);
    for (double eps : out.epsilons) {
        const Kernel kernel(family, eps);
        try {
            const auto t0 = detail::Clock::now();
            const PuModel stable = fit(points, kernel, options.fit);
            out.fit_seconds.push_back(detail::seconds_since(t0));
            out.rmse_wsvd.push_back(detail::model_rmse(stable, eval_points, truth));
            out.mean_m.push_back(stable.mean_m());
            out.max_m.push_back(static_cast<double>(stable.max_m()));
        } catch (const Error& e) {
            throw Error(e.category(), "epsilon " + std::to_string(eps) + ": " + e.what());
        }
        double standard_rmse = std::numeric_limits<double>::quiet_NaN();
        if (options.include_standard) {
            try {
                standard_rmse = detail::model_rmse(fit_standard_pu(points, kernel, options.fit), eval_points, truth);
            } catch (const LocalFitError&) {
                // recorded as a blow-up
            }
        }
        out.rmse_standard.push_back(standard_rmse);
    }
    return out;
}

struct Optimum {
    double epsilon = 0.0;
    double error = 0.0;
};

/// Argmin over finite entries; ties go to the smaller epsilon.
inline Optimum argmin_finite(std::span<const double> epsilons, std::span<const double> errors) {
    if (epsilons.size() != errors.size()) throw LengthMismatch("argmin_finite: list lengths differ");
    std::optional<Optimum> best;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!std::isfinite(errors[i])) continue;
        if (!best || errors[i] < best->error || (errors[i] == best->error && epsilons[i] < best->epsilon)) {
            best = Optimum{epsilons[i], errors[i]};
        }
    }
    if (!best) throw AllNonFinite("no finite error in the sweep");
    return *best;
}

struct OptimalEpsilons {
    Optimum wsvd;
    std::optional<Optimum> standard;
};

inline OptimalEpsilons find_optimal_epsilon(const SweepResult& sweep) {
    OptimalEpsilons out{argmin_finite(sweep.epsilons, sweep.rmse_wsvd), std::nullopt};
    try {
        out.standard = argmin_finite(sweep.epsilons, sweep.rmse_standard);
    } catch (const AllNonFinite&) {
    }
    return out;
}

struct ScalingRow {
    std::size_t n = 0;
    double seconds = 0.0;            ///< fit + evaluation, mean over repeats
    double partition_seconds = 0.0;  ///< block build alone, mean over repeats
    std::size_t active_patches = 0;
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    std::optional<double> slope;            ///< log-log slope of total time vs N
    std::optional<double> partition_slope;  ///< log-log slope of block-build time vs N
};

/// Times fit + evaluation on a 40x40 grid (single-threaded) for each size.
/// Point generation is excluded; each time is the mean of `repeats` runs.
inline ScalingTable scaling_run(std::span<const std::size_t> sizes, const Kernel& kernel, double tau,
                                std::size_t repeats = 3) {
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] <= sizes[i - 1]) throw InvalidArgument("scaling_run: sizes must increase");
    }
    repeats = std::max<std::size_t>(1, repeats);
    const auto grid = eval_grid(40);
    FitOptions options;
    options.tau = tau;
    options.threads = 1;

    ScalingTable table;
    for (std::size_t n : sizes) {
        const PointCloud points = benchmark_nodes(n);
        ScalingRow row;
        row.n = n;
        for (std::size_t r = 0; r < repeats; ++r) {
            auto t0 = detail::Clock::now();
            const PuModel model = fit(points, kernel, options);
            const auto batch = model.evaluate_batch(grid.coords);
            row.seconds += detail::seconds_since(t0);
            row.active_patches = model.cover().active_count();

            const double delta = build_cover(n).radius;
            t0 = detail::Clock::now();
            const auto blocks = build_blocks(points.coords, delta);
            row.partition_seconds += detail::seconds_since(t0);
            if (blocks.point_count() != n || batch.values.size() != grid.size()) throw InvalidArgument("scaling_run");
        }
        row.seconds /= static_cast<double>(repeats);
        row.partition_seconds /= static_cast<double>(repeats);
        table.rows.push_back(row);
    }
    if (table.rows.size() >= 2) {
        std::vector<double> ns, ts, ps;
        for (const auto& r : table.rows) {
            ns.push_back(static_cast<double>(r.n));
            ts.push_back(r.seconds);
            ps.push_back(r.partition_seconds);
        }
        table.slope = loglog_slope(ns, ts);
        table.partition_slope = loglog_slope(ns, ps);
    }
    return table;
}

struct CrossvalRow {
    double epsilon = 0.0;
    double rrmse = 0.0;
    double mean_m = 0.0;
    std::size_t skipped = 0;  ///< holdout points outside every active patch
    double fit_seconds = 0.0;
};

/// Fits the stable PU interpolant on the training part of a holdout split and
/// reports RRMSE on the held-out points for each shape parameter.
inline std::vector<CrossvalRow> crossval(const PointCloud& cloud, const HoldoutSplit& split, KernelFamily family,
                                         std::span<const double> epsilons, const FitOptions& options = {}) {
    const PointCloud train = subset(cloud, split.train_indices);
    const PointCloud test = subset(cloud, split.test_indices);
    std::vector<CrossvalRow> rows;
    for (double eps : epsilons) {
        CrossvalRow row;
        row.epsilon = eps;
        const auto t0 = detail::Clock::now();
        const PuModel model = fit(train, Kernel(family, eps), options);
        row.fit_seconds = detail::seconds_since(t0);
        row.mean_m = model.mean_m();
        std::vector<double> pred, truth;
        for (std::size_t i = 0; i < test.size(); ++i) {
            try {
                pred.push_back(model.evaluate(test.coords[i]));
                truth.push_back((*test.values)[i]);
            } catch (const NoPatch&) {
                ++row.skipped;
            }
        }
        row.rrmse = pred.empty() ? std::numeric_limits<double>::quiet_NaN() : rrmse(pred, truth);
        rows.push_back(row);
    }
    return rows;
}

/// Synthetic stand-in for digitised height-contour data: points lying close to
/// level sets of the Franke function inside an elliptical region, values
/// 1 + franke, coordinates mapped onto a [0, 7000] x [0, 5000] frame.
inline PointCloud synthetic_contours(std::size_t n, double level_step = 0.08) {
    if (n < 4) throw InvalidArgument("synthetic_contours: need at least 4 points");
    const std::size_t candidates = std::max<std::size_t>(40 * n, 100000);
    const PointCloud pool = halton(candidates, 1);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(candidates);
    for (std::size_t i = 0; i < candidates; ++i) {
        const Point& p = pool.coords[i];
        const double ex = (p.x - 0.5) / 0.48;
        const double ey = (p.y - 0.5) / 0.40;
        if (ex * ex + ey * ey > 1.0) continue;
        const double f = franke(p.x, p.y);
        const double off = f / level_step - std::round(f / level_step);
        scored.push_back({std::abs(off), i});
    }
    if (scored.size() < n) throw InvalidArgument("synthetic_contours: candidate pool too small");
    std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end());
    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t i = 0; i < n; ++i) keep.push_back(scored[i].second);
    std::sort(keep.begin(), keep.end());

    std::vector<Point> raw;
    std::vector<double> values;
    for (auto i : keep) {
        const Point& p = pool.coords[i];
        raw.push_back({7000.0 * p.x, 5000.0 * p.y});
        values.push_back(1.0 + franke(p.x, p.y));
    }
    return rescale_to_unit_square(raw, std::move(values));
}

// ---- CSV ----------------------------------------------------------------

inline constexpr const char* sweep_csv_header = "epsilon,rmse_wsvd,rmse_standard,mean_m,max_m,fit_seconds";
inline constexpr const char* crossval_csv_header = "epsilon,rrmse,mean_m,skipped,fit_seconds";
inline constexpr const char* scaling_csv_header = "n,seconds,partition_seconds,active_patches";

inline std::string format_number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_number(const std::string& field, std::size_t line) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw ParseError(line, "bad number '" + field + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ParseError(line, "bad number '" + field + "'");
    }
}

/// Splits a CSV file with the expected header into numeric rows.
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::string& header) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyFile("csv has no header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw ParseError(1, "unexpected header '" + line + "'");
    const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(parse_number(field, line_no));
        if (row.size() != columns) throw ParseError(line_no, "expected " + std::to_string(columns) + " fields");
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << sweep_csv_header << '\n';
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        out << format_number(sweep.epsilons[i]) << ',' << format_number(sweep.rmse_wsvd[i]) << ','
            << format_number(sweep.rmse_standard[i]) << ',' << format_number(sweep.mean_m[i]) << ','
            << format_number(sweep.max_m[i]) << ',' << format_number(sweep.fit_seconds[i]) << '\n';
    }
}

inline SweepResult read_sweep_csv(std::istream& in) {
    SweepResult sweep;
    for (const auto& row : read_numeric_csv(in, sweep_csv_header)) {
        sweep.epsilons.push_back(row[0]);
        sweep.rmse_wsvd.push_back(row[1]);
        sweep.rmse_standard.push_back(row[2]);
        sweep.mean_m.push_back(row[3]);
        sweep.max_m.push_back(row[4]);
        sweep.fit_seconds.push_back(row[5]);
    }
    return sweep;
}

inline void write_crossval_csv(std::ostream& out, std::span<const CrossvalRow> rows) {
    out << crossval_csv_header << '\n';
    for (const auto& r : rows) {
        out << format_number(r.epsilon) << ',' << format_number(r.rrmse) << ',' << format_number(r.mean_m) << ','
            << r.skipped << ',' << format_number(r.fit_seconds) << '\n';
    }
}

inline std::vector<CrossvalRow> read_crossval_csv(std::istream& in) {
    std::vector<CrossvalRow> rows;
    for (const auto& row : read_numeric_csv(in, crossval_csv_header)) {
        rows.push_back({row[0], row[1], row[2], static_cast<std::size_t>(row[3]), row[4]});
    }
    return rows;
}

inline void write_scaling_csv(std::ostream& out, const ScalingTable& table) {
    out << scaling_csv_header << '\n';
    for (const auto& r : table.rows) {
        out << r.n << ',' << format_number(r.seconds) << ',' << format_number(r.partition_seconds) << ','
            << r.active_patches << '\n';
    }
}

inline ScalingTable read_scaling_csv(std::istream& in) {
    ScalingTable table;
    for (const auto& row : read_numeric_csv(in, scaling_csv_header)) {
        table.rows.push_back({static_cast<std::size_t>(row[0]), row[1], row[2], static_cast<std::size_t>(row[3])});
    }
    return table;
}

}  // namespace wsvdpu
