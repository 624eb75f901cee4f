#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wsvdpu/wsvdpu.hpp"

namespace wsvdpu::cli {

enum class Command { Fit, Eval, Sweep, Scale, Crossval, Gen };

struct EpsRange {
    double lo = 1e-3;
    double hi = 1e2;
    std::size_t count = 20;
};

/// Parses "lo:hi:count".
inline EpsRange parse_eps_range(const std::string& text) {
    EpsRange r;
    std::stringstream ss(text);
    std::string lo, hi, count;
    if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') || !std::getline(ss, count) || count.empty()) {
        throw InvalidArgument("--eps-range must look like lo:hi:count, got '" + text + "'");
    }
    try {
        r.lo = std::stod(lo);
        r.hi = std::stod(hi);
        const long c = std::stol(count);
        if (c < 2) throw InvalidArgument("--eps-range count must be at least 2");
        r.count = static_cast<std::size_t>(c);
    } catch (const std::logic_error&) {
        throw InvalidArgument("--eps-range must look like lo:hi:count, got '" + text + "'");
    }
    if (!(r.lo > 0.0) || !(r.hi > r.lo)) throw InvalidArgument("--eps-range needs 0 < lo < hi");
    return r;
}

inline std::size_t default_threads() {
    if (const char* env = std::getenv("WSVD_PU_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::logic_error&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct RunConfig {
    Command command = Command::Fit;
    std::string kernel = "ga";
    std::optional<double> epsilon;
    std::optional<std::string> eps_range;
    double tau = default_tau;
    std::optional<std::size_t> n;
    std::optional<std::string> data;
    std::optional<std::size_t> synthetic;
    std::size_t grid = 40;
    std::optional<std::string> out;
    std::optional<std::string> model;
    std::optional<std::string> model_out;
    std::optional<std::string> points;
    std::uint64_t seed = 0;
    std::string weight = "w2";
    std::optional<std::size_t> threads;
    std::size_t holdout = 90;
    std::vector<std::size_t> sizes{4225, 16641, 66049};
    std::size_t repeats = 3;
    std::string kind = "halton";
    std::uint64_t halton_start = 0;
    bool no_standard = false;
    bool franke_truth = false;
};

/// Rejects inconsistent flag combinations, naming the offending flag.
inline void validate(const RunConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw InvalidArgument(msg);
    };
    parse_kernel_family(c.kernel);
    parse_weight_profile(c.weight);
    need(c.tau >= 0.0, "--tau must be nonnegative");
    need(!c.threads || *c.threads >= 1, "--threads must be at least 1");
    if (c.epsilon) need(*c.epsilon > 0.0 && std::isfinite(*c.epsilon), "--epsilon must be positive");
    if (c.eps_range) parse_eps_range(*c.eps_range);
    switch (c.command) {
        case Command::Fit:
            need(c.n.has_value() != c.data.has_value(), "fit: give exactly one of --n or --data");
            need(c.epsilon.has_value(), "fit: --epsilon is required");
            need(!c.n || *c.n >= 1, "--n must be positive");
            need(c.grid >= 2, "--grid must be at least 2");
            break;
        case Command::Eval:
            need(c.model.has_value(), "eval: --model is required");
            need(c.grid >= 2, "--grid must be at least 2");
            break;
        case Command::Sweep:
            need(c.n.has_value(), "sweep: --n is required");
            need(*c.n >= 1, "--n must be positive");
            need(!c.epsilon, "sweep: use --eps-range, not --epsilon");
            need(c.grid >= 2, "--grid must be at least 2");
            break;
        case Command::Scale:
            need(c.epsilon.has_value(), "scale: --epsilon is required");
            need(!c.sizes.empty(), "scale: --sizes must list at least one size");
            for (std::size_t i = 1; i < c.sizes.size(); ++i) need(c.sizes[i] > c.sizes[i - 1], "scale: --sizes must increase");
            need(c.repeats >= 1, "--repeats must be at least 1");
            break;
        case Command::Crossval:
            need(c.data.has_value() != c.synthetic.has_value(), "crossval: give exactly one of --data or --synthetic");
            need(!(c.epsilon && c.eps_range), "crossval: --epsilon and --eps-range are mutually exclusive");
            need(c.holdout >= 1, "--holdout must be positive");
            break;
        case Command::Gen:
            need(c.out.has_value(), "gen: --out is required");
            need(c.kind == "halton" || c.kind == "grid" || c.kind == "contours",
                 "gen: --kind must be halton, grid or contours");
            if (c.kind == "grid") {
                need(c.grid >= 2, "--grid must be at least 2");
            } else {
                need(c.n.has_value() && *c.n >= 1, "gen: --n is required for --kind " + c.kind);
            }
            break;
    }
}

namespace detail {

inline std::string sci(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

inline FitOptions fit_options(const RunConfig& c) {
    FitOptions o;
    o.tau = c.tau;
    o.weight = parse_weight_profile(c.weight);
    o.threads = c.threads.value_or(default_threads());
    return o;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InvalidArgument("cannot write '" + path + "' (--out)");
    return f;
}

inline PointCloud input_cloud(const RunConfig& c) {
    if (c.data) return load_xyz(*c.data);
    if (c.synthetic) return synthetic_contours(*c.synthetic);
    auto cloud = halton(*c.n, c.halton_start);
    return with_franke_values(std::move(cloud));
}

inline int run_fit(const RunConfig& c, std::ostream& out) {
    const PointCloud points = input_cloud(c);
    const Kernel kernel(parse_kernel_family(c.kernel), *c.epsilon);
    const PuModel model = fit(points, kernel, fit_options(c));
    if (c.model_out) save_model(*c.model_out, model);
    out << "fit: N=" << points.size() << " d_active=" << model.cover().active_count()
        << " mean_m=" << model.mean_m() << " max_m=" << model.max_m();
    if (c.n) {
        const auto grid = eval_grid(c.grid);
        const auto truth = franke_values(grid.coords);
        const auto pred = model.evaluate_batch(grid.coords);
        out << " rmse=" << sci(rmse(pred.values, truth));
    }
    out << '\n';
    return 0;
}

inline int run_eval(const RunConfig& c, std::ostream& out) {
    const PuModel model = load_model(*c.model);
    std::vector<Point> unit;
    std::vector<Point> original;
    std::vector<double> file_values;
    if (c.points) {
        std::ifstream in(*c.points);
        if (!in) throw EmptyFile("cannot open '" + *c.points + "' (--points)");
        auto raw = read_xyz_raw(in);
        original = raw.coords;
        file_values = std::move(raw.values);
        for (const auto& p : original) unit.push_back(model.train_points().to_unit(p));
    } else {
        unit = eval_grid(c.grid).coords;
        for (const auto& p : unit) original.push_back(model.train_points().to_original(p));
    }
    const auto batch = model.evaluate_batch(unit);
    if (c.out) {
        auto f = open_out(*c.out);
        f << "x,y,value\n";
        for (std::size_t i = 0; i < unit.size(); ++i) {
            f << format_number(original[i].x) << ',' << format_number(original[i].y) << ','
              << format_number(batch.values[i]) << '\n';
        }
    }
    out << "eval: points=" << unit.size() << " uncovered=" << batch.no_patch;
    std::vector<double> truth;
    if (c.franke_truth) {
        truth = franke_values(unit);
    } else if (!file_values.empty()) {
        truth = file_values;
    }
    if (!truth.empty()) {
        std::vector<double> p, t;
        for (std::size_t i = 0; i < unit.size(); ++i) {
            if (std::isnan(batch.values[i])) continue;
            p.push_back(batch.values[i]);
            t.push_back(truth[i]);
        }
        if (!p.empty()) out << " rmse=" << sci(rmse(p, t));
    }
    out << '\n';
    return 0;
}

inline int run_sweep(const RunConfig& c, std::ostream& out) {
    const PointCloud points = input_cloud(c);
    const auto range = parse_eps_range(c.eps_range.value_or("1e-3:1e2:20"));
    const auto grid = eval_grid(c.grid);
    const auto truth = franke_values(grid.coords);
    SweepOptions options;
    options.fit = fit_options(c);
    options.include_standard = !c.no_standard;
    const auto sweep = epsilon_sweep(points, parse_kernel_family(c.kernel), range.lo, range.hi, range.count, c.tau,
                                     grid.coords, truth, options);
    if (c.out) {
        auto f = open_out(*c.out);
        write_sweep_csv(f, sweep);
    }
    const auto best = find_optimal_epsilon(sweep);
    out << "sweep: N=" << points.size() << " rows=" << sweep.size() << " eps_opt_wsvd=" << best.wsvd.epsilon
        << " rmse_opt_wsvd=" << sci(best.wsvd.error);
    if (best.standard) {
        out << " eps_opt_standard=" << best.standard->epsilon << " rmse_opt_standard=" << sci(best.standard->error);
    }
    out << '\n';
    return 0;
}

inline int run_scale(const RunConfig& c, std::ostream& out) {
    const Kernel kernel(parse_kernel_family(c.kernel), *c.epsilon);
    const auto table = scaling_run(c.sizes, kernel, c.tau, c.repeats);
    if (c.out) {
        auto f = open_out(*c.out);
        write_scaling_csv(f, table);
    }
    for (const auto& r : table.rows) {
        out << "scale: N=" << r.n << " seconds=" << r.seconds << " partition_seconds=" << r.partition_seconds << '\n';
    }
    if (table.slope) out << "scale: slope=" << *table.slope << " partition_slope=" << *table.partition_slope << '\n';
    return 0;
}

inline int run_crossval(const RunConfig& c, std::ostream& out) {
    const PointCloud cloud = input_cloud(c);
    const auto split = split_holdout(cloud, c.holdout, c.seed);
    std::vector<double> eps;
    if (c.epsilon) {
        eps.push_back(*c.epsilon);
    } else {
        const auto r = parse_eps_range(c.eps_range.value_or("1e-3:1e2:20"));
        eps = log_space(r.lo, r.hi, r.count);
    }
    const auto rows = crossval(cloud, split, parse_kernel_family(c.kernel), eps, fit_options(c));
    if (c.out) {
        auto f = open_out(*c.out);
        write_crossval_csv(f, rows);
    }
    std::vector<double> e, err;
    for (const auto& r : rows) {
        e.push_back(r.epsilon);
        err.push_back(r.rrmse);
    }
    const auto best = argmin_finite(e, err);
    out << "crossval: N=" << cloud.size() << " train=" << split.train_indices.size()
        << " test=" << split.test_indices.size() << " skipped=" << rows.front().skipped
        << " eps_opt=" << best.epsilon << " rrmse=" << sci(best.error) << '\n';
    return 0;
}

inline int run_gen(const RunConfig& c, std::ostream& out) {
    PointCloud cloud;
    if (c.kind == "halton") {
        cloud = with_franke_values(halton(*c.n, c.halton_start));
    } else if (c.kind == "grid") {
        cloud = with_franke_values(eval_grid(c.grid));
    } else {
        cloud = synthetic_contours(*c.n);
    }
    save_xyz(*c.out, cloud);
    out << "gen: kind=" << c.kind << " points=" << cloud.size() << " out=" << *c.out << '\n';
    return 0;
}

}  // namespace detail

inline int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::Usage: return 2;
        case ErrorCategory::Data: return 3;
        case ErrorCategory::Numerical: return 4;
    }
    return 1;
}

inline const char* category_name(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::Usage: return "usage";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Numerical: return "numerical";
    }
    return "unknown";
}

/// Executes a validated configuration. Errors become a single
/// "error[<category>]: <message>" line on `err` and exit 2 (usage), 3 (data)
/// or 4 (numerical).
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        validate(c);
        switch (c.command) {
            case Command::Fit: return detail::run_fit(c, out);
            case Command::Eval: return detail::run_eval(c, out);
            case Command::Sweep: return detail::run_sweep(c, out);
            case Command::Scale: return detail::run_scale(c, out);
            case Command::Crossval: return detail::run_crossval(c, out);
            case Command::Gen: return detail::run_gen(c, out);
        }
    } catch (const Error& e) {
        err << "error[" << category_name(e.category()) << "]: " << e.what() << '\n';
        return exit_code(e.category());
    }
    return 1;
}

/// Builds the command-line parser; `config` receives the parsed flags.
inline void build_app(CLI::App& app, RunConfig& config) {
    app.description("Stable partition-of-unity RBF interpolation with Lanczos-approximated WSVD bases");
    app.require_subcommand(1);

    auto kernel_flag = [&](CLI::App* s) {
        s->add_option("--kernel", config.kernel, "Kernel family: ga, imq, m6, m4, w6, w4")->capture_default_str();
    };
    auto tau_flag = [&](CLI::App* s) {
        s->add_option("--tau", config.tau, "Trace stopping tolerance of the Lanczos process")->capture_default_str();
    };
    auto weight_flag = [&](CLI::App* s) {
        s->add_option("--weight", config.weight, "Shepard weight generator: w2, w4, w6")->capture_default_str();
    };
    auto threads_flag = [&](CLI::App* s) {
        s->add_option("--threads", config.threads,
                      "Parallel fit workers (default: WSVD_PU_THREADS or available cores)");
    };
    auto halton_flag = [&](CLI::App* s) {
        s->add_option("--halton-start", config.halton_start, "First Halton index used for --n node sets")
            ->capture_default_str();
    };
    auto grid_flag = [&](CLI::App* s) {
        s->add_option("--grid", config.grid, "Side of the equispaced evaluation grid")->capture_default_str();
    };

    auto* fit_cmd = app.add_subcommand("fit", "Fit a model and print N, active patches, mean m and RMSE");
    fit_cmd->callback([&] { config.command = Command::Fit; });
    fit_cmd->add_option("--n", config.n, "Number of Halton nodes sampled from Franke's function");
    fit_cmd->add_option("--data", config.data, "XYZ data file ('x y f' lines)");
    fit_cmd->add_option("--epsilon", config.epsilon, "Shape parameter");
    fit_cmd->add_option("--model-out", config.model_out, "Write the fitted model to this file");
    kernel_flag(fit_cmd);
    tau_flag(fit_cmd);
    weight_flag(fit_cmd);
    threads_flag(fit_cmd);
    halton_flag(fit_cmd);
    grid_flag(fit_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model on a grid or on XYZ points");
    eval_cmd->callback([&] { config.command = Command::Eval; });
    eval_cmd->add_option("--model", config.model, "Model file written by fit --model-out");
    eval_cmd->add_option("--points", config.points, "XYZ file of evaluation points (original frame)");
    eval_cmd->add_option("--out", config.out, "CSV output: x,y,value");
    eval_cmd->add_flag("--franke", config.franke_truth, "Report RMSE against Franke's function");
    grid_flag(eval_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "RMSE of stable and standard PU over a range of shape parameters");
    sweep_cmd->callback([&] { config.command = Command::Sweep; });
    sweep_cmd->add_option("--n", config.n, "Number of Halton nodes sampled from Franke's function");
    sweep_cmd->add_option("--eps-range", config.eps_range, "Shape parameter range lo:hi:count (default 1e-3:1e2:20)");
    sweep_cmd->add_option("--out", config.out, "CSV output path");
    sweep_cmd->add_flag("--no-standard", config.no_standard, "Skip the standard PU comparison");
    kernel_flag(sweep_cmd);
    tau_flag(sweep_cmd);
    weight_flag(sweep_cmd);
    threads_flag(sweep_cmd);
    halton_flag(sweep_cmd);
    grid_flag(sweep_cmd);

    auto* scale_cmd = app.add_subcommand("scale", "Single-threaded fit+evaluate timings and log-log slopes");
    scale_cmd->callback([&] { config.command = Command::Scale; });
    scale_cmd->add_option("--sizes", config.sizes, "Increasing node counts")->delimiter(',')->capture_default_str();
    scale_cmd->add_option("--epsilon", config.epsilon, "Shape parameter");
    scale_cmd->add_option("--repeats", config.repeats, "Runs averaged per size")->capture_default_str();
    scale_cmd->add_option("--out", config.out, "CSV output path");
    kernel_flag(scale_cmd);
    tau_flag(scale_cmd);

    auto* cv_cmd = app.add_subcommand("crossval", "Holdout cross-validation (RRMSE) on scattered data");
    cv_cmd->callback([&] { config.command = Command::Crossval; });
    cv_cmd->add_option("--data", config.data, "XYZ data file ('x y f' lines)");
    cv_cmd->add_option("--synthetic", config.synthetic, "Use N synthetic contour points instead of --data");
    cv_cmd->add_option("--holdout", config.holdout, "Number of validation points")->capture_default_str();
    cv_cmd->add_option("--seed", config.seed, "Holdout selection seed")->capture_default_str();
    cv_cmd->add_option("--epsilon", config.epsilon, "Single shape parameter");
    cv_cmd->add_option("--eps-range", config.eps_range, "Shape parameter range lo:hi:count (default 1e-3:1e2:20)");
    cv_cmd->add_option("--out", config.out, "CSV output path");
    kernel_flag(cv_cmd);
    tau_flag(cv_cmd);
    weight_flag(cv_cmd);
    threads_flag(cv_cmd);

    auto* gen_cmd = app.add_subcommand("gen", "Write a point set with values as an XYZ file");
    gen_cmd->callback([&] { config.command = Command::Gen; });
    gen_cmd->add_option("--kind", config.kind, "halton, grid or contours")->capture_default_str();
    gen_cmd->add_option("--n", config.n, "Number of points (halton, contours)");
    gen_cmd->add_option("--out", config.out, "XYZ output path");
    halton_flag(gen_cmd);
    grid_flag(gen_cmd);
}

/// Full command-line entry point.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig config;
    CLI::App app("wsvd_pu");
    build_app(app, config);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error[usage]: " << e.what() << '\n';
        return 2;
    }
    return run(config, out, err);
}

}  // namespace wsvdpu::cli
