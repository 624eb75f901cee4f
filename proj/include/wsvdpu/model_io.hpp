#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pu.hpp"

namespace wsvdpu {

// Text model format, version 1 (one record per line, numbers as %.17g):
//
//   wsvdpu-model 1
//   kernel <family> <epsilon>
//   method stable|direct
//   weight w2|w4|w6
//   tau <tau>
//   box <xmin> <xmax> <ymin> <ymax>
//   points <N>
//   <x> <y> <f>                       N lines, unit-square coordinates
//   cover <per_side> <radius> <d>
//   <x> <y> <active>                  d lines, active is 0 or 1
//   fits <count>
//   fit <subdomain> <nodes> <m_used> <termination> <status> <condition>
//   <node indices>                    one line
//   <coefficients>                    one line
//   end

inline constexpr int model_format_version = 1;

namespace detail {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::istringstream next(const std::string& what) {
        std::string line;
        if (!std::getline(in_, line)) throw ParseError(line_ + 1, "unexpected end of model, expected " + what);
        ++line_;
        return std::istringstream(line);
    }

    /// Reads a line starting with `keyword` and returns the rest as a stream.
    std::istringstream keyed(const std::string& keyword) {
        auto ss = next(keyword);
        std::string word;
        ss >> word;
        if (word != keyword) throw ParseError(line_, "expected '" + keyword + "', found '" + word + "'");
        return ss;
    }

    template <class T>
    T get(std::istringstream& ss, const std::string& what) {
        T v{};
        if (!(ss >> v)) throw ParseError(line_, "cannot read " + what);
        return v;
    }

    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

inline double read_double(LineReader& r, std::istringstream& ss, const std::string& what) {
    const auto token = r.get<std::string>(ss, what);
    try {
        return std::stod(token);
    } catch (const std::logic_error&) {
        throw ParseError(r.line(), "bad number for " + what + ": '" + token + "'");
    }
}

inline Termination parse_termination(const std::string& s, std::size_t line) {
    for (auto t : {Termination::Breakdown, Termination::TraceTolerance, Termination::FullRank}) {
        if (s == to_string(t)) return t;
    }
    throw ParseError(line, "unknown termination '" + s + "'");
}

}  // namespace detail

inline void save_model(std::ostream& out, const PuModel& model) {
    using detail::g17;
    const auto& pts = model.train_points();
    const auto& box = pts.original_box;
    out << "wsvdpu-model " << model_format_version << '\n';
    out << "kernel " << to_string(model.kernel().family()) << ' ' << g17(model.kernel().epsilon()) << '\n';
    out << "method " << (model.method() == LocalMethod::Stable ? "stable" : "direct") << '\n';
    out << "weight " << to_string(model.weight_profile()) << '\n';
    out << "tau " << g17(model.options().tau) << '\n';
    out << "box " << g17(box.xmin) << ' ' << g17(box.xmax) << ' ' << g17(box.ymin) << ' ' << g17(box.ymax) << '\n';
    out << "points " << pts.size() << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out << g17(pts.coords[i].x) << ' ' << g17(pts.coords[i].y) << ' ' << g17((*pts.values)[i]) << '\n';
    }
    const auto& cover = model.cover();
    out << "cover " << cover.per_side << ' ' << g17(cover.radius) << ' ' << cover.size() << '\n';
    for (std::size_t j = 0; j < cover.size(); ++j) {
        out << g17(cover.centres[j].x) << ' ' << g17(cover.centres[j].y) << ' ' << (cover.active[j] ? 1 : 0) << '\n';
    }
    out << "fits " << model.fits().size() << '\n';
    for (const auto& fit : model.fits()) {
        out << "fit " << fit.subdomain << ' ' << fit.node_indices.size() << ' ' << fit.m_used << ' '
            << to_string(fit.terminated_by) << ' ' << (fit.status == FitStatus::Ok ? "ok" : "singular") << ' '
            << g17(fit.condition_estimate) << '\n';
        for (std::size_t i = 0; i < fit.node_indices.size(); ++i) out << (i ? " " : "") << fit.node_indices[i];
        out << '\n';
        for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i) out << (i ? " " : "") << g17(fit.coefficients(i));
        out << '\n';
    }
    out << "end\n";
}

inline PuModel load_model(std::istream& in) {
    detail::LineReader r(in);
    {
        auto ss = r.keyed("wsvdpu-model");
        const int version = r.get<int>(ss, "version");
        if (version != model_format_version) {
            throw ParseError(r.line(), "unsupported model version " + std::to_string(version));
        }
    }
    auto ks = r.keyed("kernel");
    const auto family = parse_kernel_family(r.get<std::string>(ks, "kernel family"));
    const Kernel kernel(family, detail::read_double(r, ks, "epsilon"));

    auto ms = r.keyed("method");
    const auto method_name = r.get<std::string>(ms, "method");
    if (method_name != "stable" && method_name != "direct") throw ParseError(r.line(), "unknown method");
    const LocalMethod method = method_name == "stable" ? LocalMethod::Stable : LocalMethod::Direct;

    FitOptions options;
    auto ws = r.keyed("weight");
    options.weight = parse_weight_profile(r.get<std::string>(ws, "weight profile"));
    auto ts = r.keyed("tau");
    options.tau = detail::read_double(r, ts, "tau");

    PointCloud points;
    auto bs = r.keyed("box");
    points.original_box.xmin = detail::read_double(r, bs, "xmin");
    points.original_box.xmax = detail::read_double(r, bs, "xmax");
    points.original_box.ymin = detail::read_double(r, bs, "ymin");
    points.original_box.ymax = detail::read_double(r, bs, "ymax");

    auto ps = r.keyed("points");
    const auto n = r.get<std::size_t>(ps, "point count");
    std::vector<double> values;
    points.coords.reserve(n);
    values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ls = r.next("point");
        const double x = detail::read_double(r, ls, "x");
        const double y = detail::read_double(r, ls, "y");
        values.push_back(detail::read_double(r, ls, "f"));
        points.coords.push_back({x, y});
    }
    points.values = std::move(values);

    auto cs = r.keyed("cover");
    PuCover cover;
    cover.per_side = r.get<std::size_t>(cs, "per-side count");
    cover.radius = detail::read_double(r, cs, "radius");
    const auto d = r.get<std::size_t>(cs, "centre count");
    for (std::size_t j = 0; j < d; ++j) {
        auto ls = r.next("centre");
        const double x = detail::read_double(r, ls, "x");
        const double y = detail::read_double(r, ls, "y");
        cover.centres.push_back({x, y});
        cover.active.push_back(r.get<int>(ls, "active flag") != 0);
    }

    auto fs = r.keyed("fits");
    const auto count = r.get<std::size_t>(fs, "fit count");
    std::vector<LocalFit> fits(count);
    for (auto& fit : fits) {
        auto hs = r.keyed("fit");
        fit.subdomain = r.get<std::size_t>(hs, "subdomain");
        const auto nodes = r.get<std::size_t>(hs, "node count");
        fit.m_used = r.get<std::size_t>(hs, "m_used");
        fit.terminated_by = detail::parse_termination(r.get<std::string>(hs, "termination"), r.line());
        const auto status = r.get<std::string>(hs, "status");
        if (status != "ok" && status != "singular") throw ParseError(r.line(), "unknown fit status");
        fit.status = status == "ok" ? FitStatus::Ok : FitStatus::Singular;
        fit.condition_estimate = detail::read_double(r, hs, "condition estimate");

        auto is = r.next("node indices");
        fit.node_indices.resize(nodes);
        for (auto& idx : fit.node_indices) {
            idx = r.get<std::size_t>(is, "node index");
            if (idx >= n) throw ParseError(r.line(), "node index out of range");
        }
        auto vs = r.next("coefficients");
        fit.coefficients.resize(static_cast<Eigen::Index>(nodes));
        for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i) {
            fit.coefficients(i) = detail::read_double(r, vs, "coefficient");
        }
    }
    r.keyed("end");
    return assemble_model(std::move(points), kernel, std::move(cover), std::move(fits), method, options);
}

inline void save_model(const std::string& path, const PuModel& model) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    save_model(out, model);
}

inline PuModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EmptyFile("cannot open '" + path + "'");
    return load_model(in);
}

}  // namespace wsvdpu
