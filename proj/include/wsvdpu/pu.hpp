#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "kernels.hpp"
#include "partition.hpp"
#include "points.hpp"
#include "stablebasis.hpp"

namespace wsvdpu {

/// Compactly supported generators for the Shepard weights, scaled to vanish
/// at the patch radius.
enum class WeightProfile { Wendland2, Wendland4, Wendland6 };

inline std::string_view to_string(WeightProfile w) {
    switch (w) {
        case WeightProfile::Wendland2: return "w2";
        case WeightProfile::Wendland4: return "w4";
        case WeightProfile::Wendland6: return "w6";
    }
    return "?";
}

inline WeightProfile parse_weight_profile(std::string_view name) {
    if (name == "w2") return WeightProfile::Wendland2;
    if (name == "w4") return WeightProfile::Wendland4;
    if (name == "w6") return WeightProfile::Wendland6;
    throw InvalidArgument("unknown weight profile '" + std::string(name) + "' (expected w2, w4 or w6)");
}

/// Generator value at distance r from a centre of a patch with radius delta.
inline double weight_generator(WeightProfile profile, double r, double delta) {
    const double t = r / delta;
    if (t >= 1.0) return 0.0;
    switch (profile) {
        case WeightProfile::Wendland2: {
            const double s = 1.0 - t;
            const double s2 = s * s;
            return s2 * s2 * (4.0 * t + 1.0);
        }
        case WeightProfile::Wendland4: return Kernel(KernelFamily::W4, 1.0 / delta).eval(r);
        case WeightProfile::Wendland6: return Kernel(KernelFamily::W6, 1.0 / delta).eval(r);
    }
    return 0.0;
}

enum class LocalMethod { Stable, Direct };

enum class FitStatus { Ok, Singular };

struct LocalFit {
    std::size_t subdomain = 0;
    std::vector<std::size_t> node_indices;  ///< ascending indices into the training cloud
    Eigen::VectorXd coefficients;
    std::size_t m_used = 0;
    Termination terminated_by = Termination::FullRank;
    FitStatus status = FitStatus::Ok;
    double condition_estimate = 1.0;  ///< only filled by the direct solver
};

struct FitOptions {
    double tau = default_tau;
    WeightProfile weight = WeightProfile::Wendland2;
    std::size_t threads = 1;
};

/// Local errors re-raised with the subdomain they came from.
class LocalFitError : public Error {
public:
    LocalFitError(std::size_t subdomain, const Error& cause)
        : Error(cause.category(), "subdomain " + std::to_string(subdomain) + ": " + cause.what()),
          subdomain_(subdomain) {}

    std::size_t subdomain() const noexcept { return subdomain_; }

private:
    std::size_t subdomain_;
};

/// Counters filled by evaluate() when requested.
struct EvalStats {
    std::size_t local_evaluations = 0;
    double max_centre_distance = 0.0;
};

class PuModel;
PuModel assemble_model(PointCloud points, Kernel kernel, PuCover cover, std::vector<LocalFit> fits,
                       LocalMethod method, FitOptions options);

/// Global partition-of-unity interpolant: a Shepard-weighted blend of local
/// kernel fits on circular patches.
class PuModel {
public:
    const Kernel& kernel() const { return kernel_; }
    const PuCover& cover() const { return cover_; }
    const BlockPartition& partition() const { return partition_; }
    const PointCloud& train_points() const { return train_; }
    const std::vector<LocalFit>& fits() const { return fits_; }
    LocalMethod method() const { return method_; }
    const FitOptions& options() const { return options_; }
    WeightProfile weight_profile() const { return options_.weight; }

    /// Fit owning subdomain j, or nullptr when the patch is inactive.
    const LocalFit* fit_for(std::size_t subdomain) const {
        const auto slot = fit_slot_.at(subdomain);
        return slot < 0 ? nullptr : &fits_[static_cast<std::size_t>(slot)];
    }

    /// Active subdomains whose closed patch contains x, ascending.
    std::vector<std::size_t> patches_containing(const Point& x) const {
        std::vector<std::size_t> out;
        centre_blocks_.for_each_in_patch(cover_.centres, x, cover_.radius, [&](std::size_t j, double) {
            if (fit_slot_[j] >= 0) out.push_back(j);
        });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Shepard weight W_j(x) = phi_j(x) / sum_{k in I(x)} phi_k(x). Zero when x
    /// is outside patch j. If x sits on the rim of every patch in I(x) (all
    /// generators vanish) the weights fall back to 1/|I(x)|.
    double shepard_weight(const Point& x, std::size_t j) const {
        const auto patches = patches_containing(x);
        if (patches.empty()) throw NoPatch("point (" + std::to_string(x.x) + ", " + std::to_string(x.y) + ") is in no active patch");
        if (!std::binary_search(patches.begin(), patches.end(), j)) return 0.0;
        double total = 0.0;
        for (auto k : patches) total += generator(x, k);
        if (!(total > 0.0)) return 1.0 / static_cast<double>(patches.size());
        return generator(x, j) / total;
    }

    /// Value of local fit j at x (no weighting).
    double local_value(const LocalFit& fit, const Point& x) const {
        double s = 0.0;
        const auto& c = fit.coefficients;
        const double support = kernel_.support_radius();
        for (std::size_t i = 0; i < fit.node_indices.size(); ++i) {
            const double r = distance(x, train_.coords[fit.node_indices[i]]);
            if (r < support) s += c(static_cast<Eigen::Index>(i)) * kernel_.eval(r);
        }
        return s;
    }

    /// Blended value at x. Throws NoPatch when no active patch contains x.
    /// A singular direct-solve fit propagates NaN.
    double evaluate(const Point& x, EvalStats* stats = nullptr) const {
        double num = 0.0;
        double den = 0.0;
        std::size_t count = 0;
        double plain = 0.0;
        centre_blocks_.for_each_in_patch(cover_.centres, x, cover_.radius, [&](std::size_t j, double dist) {
            const auto slot = fit_slot_[j];
            if (slot < 0) return;
            const LocalFit& fit = fits_[static_cast<std::size_t>(slot)];
            const double value = local_value(fit, x);
            const double g = weight_generator(options_.weight, dist, cover_.radius);
            num += g * value;
            den += g;
            plain += value;
            ++count;
            if (stats) {
                ++stats->local_evaluations;
                stats->max_centre_distance = std::max(stats->max_centre_distance, dist);
            }
        });
        if (count == 0) {
            throw NoPatch("point (" + std::to_string(x.x) + ", " + std::to_string(x.y) + ") is in no active patch");
        }
        if (!(den > 0.0)) return plain / static_cast<double>(count);
        return num / den;
    }

    struct BatchResult {
        std::vector<double> values;  ///< NaN where no patch covers the point
        std::size_t no_patch = 0;
    };

    BatchResult evaluate_batch(std::span<const Point> xs) const {
        BatchResult out;
        out.values.reserve(xs.size());
        for (const auto& x : xs) {
            try {
                out.values.push_back(evaluate(x));
            } catch (const NoPatch&) {
                out.values.push_back(std::numeric_limits<double>::quiet_NaN());
                ++out.no_patch;
            }
        }
        return out;
    }

    double mean_m() const {
        if (fits_.empty()) return 0.0;
        double s = 0.0;
        for (const auto& f : fits_) s += static_cast<double>(f.m_used);
        return s / static_cast<double>(fits_.size());
    }

    std::size_t max_m() const {
        std::size_t m = 0;
        for (const auto& f : fits_) m = std::max(m, f.m_used);
        return m;
    }

    std::size_t singular_fits() const {
        return static_cast<std::size_t>(std::count_if(fits_.begin(), fits_.end(),
                                                      [](const LocalFit& f) { return f.status == FitStatus::Singular; }));
    }

    double max_condition_estimate() const {
        double c = 0.0;
        for (const auto& f : fits_) c = std::max(c, f.condition_estimate);
        return c;
    }

private:
    friend PuModel assemble_model(PointCloud, Kernel, PuCover, std::vector<LocalFit>, LocalMethod, FitOptions);

    PuModel(Kernel kernel) : kernel_(kernel) {}

    double generator(const Point& x, std::size_t j) const {
        return weight_generator(options_.weight, distance(x, cover_.centres[j]), cover_.radius);
    }

    Kernel kernel_;
    PuCover cover_;
    BlockPartition partition_;
    BlockPartition centre_blocks_;
    PointCloud train_;
    std::vector<LocalFit> fits_;
    std::vector<std::ptrdiff_t> fit_slot_;
    LocalMethod method_ = LocalMethod::Stable;
    FitOptions options_;
};

/// Builds the lookup structures around already computed local fits. Patches
/// without a fit are marked inactive.
inline PuModel assemble_model(PointCloud points, Kernel kernel, PuCover cover, std::vector<LocalFit> fits,
                              LocalMethod method, FitOptions options) {
    PuModel model(kernel);
    model.partition_ = build_blocks(points.coords, cover.radius);
    model.centre_blocks_ = build_blocks(cover.centres, cover.radius);
    model.fit_slot_.assign(cover.size(), -1);
    for (std::size_t s = 0; s < fits.size(); ++s) {
        const auto j = fits[s].subdomain;
        if (j >= cover.size()) throw InvalidArgument("fit refers to subdomain " + std::to_string(j) + " beyond the cover");
        if (model.fit_slot_[j] >= 0) throw InvalidArgument("two fits for subdomain " + std::to_string(j));
        model.fit_slot_[j] = static_cast<std::ptrdiff_t>(s);
    }
    for (std::size_t j = 0; j < cover.size(); ++j) cover.active[j] = model.fit_slot_[j] >= 0;
    model.cover_ = std::move(cover);
    model.train_ = std::move(points);
    model.fits_ = std::move(fits);
    model.method_ = method;
    model.options_ = options;
    return model;
}

namespace detail {

inline LocalFit solve_direct(const Eigen::MatrixXd& a, const Eigen::VectorXd& f) {
    LocalFit fit;
    fit.m_used = static_cast<std::size_t>(f.size());
    const auto n = a.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        const double rc = llt.rcond();
        fit.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        fit.coefficients = llt.solve(f);
    } else {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        const double rc = lu.rcond();
        fit.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        bool zero_pivot = false;
        for (Eigen::Index i = 0; i < n; ++i) zero_pivot |= lu.matrixLU()(i, i) == 0.0;
        if (!zero_pivot) fit.coefficients = lu.solve(f);
    }
    if (fit.coefficients.size() != n || !fit.coefficients.allFinite()) {
        fit.status = FitStatus::Singular;
        fit.coefficients = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    }
    return fit;
}

inline LocalFit fit_subdomain(const PointCloud& points, const Kernel& kernel, std::size_t j,
                              std::vector<std::size_t> nodes, LocalMethod method, double tau) {
    std::vector<Point> local(nodes.size());
    Eigen::VectorXd f(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        local[i] = points.coords[nodes[i]];
        f(static_cast<Eigen::Index>(i)) = (*points.values)[nodes[i]];
    }
    const Eigen::MatrixXd a = kernel_matrix(kernel, local);
    LocalFit fit;
    if (method == LocalMethod::Direct && nodes.size() > 1) {
        fit = solve_direct(a, f);
    } else {
        auto solved = solve_stable(a, f, kernel.value_at_zero(), tau);
        fit.coefficients = std::move(solved.coefficients);
        fit.m_used = solved.m_used;
        fit.terminated_by = solved.terminated_by;
    }
    fit.subdomain = j;
    fit.node_indices = std::move(nodes);
    return fit;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any worker is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = count;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

inline PuModel fit_pu(PointCloud points, const Kernel& kernel, const FitOptions& options, LocalMethod method) {
    if (points.size() == 0) throw InvalidArgument("fit: no points");
    if (!points.values || points.values->size() != points.size()) {
        throw LengthMismatch("fit: need one value per point");
    }
    PuCover cover = build_cover(points.size());
    const BlockPartition blocks = build_blocks(points.coords, cover.radius);
    cover = deactivate_empty(std::move(cover), blocks, points.coords);

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < cover.size(); ++j) {
        if (cover.active[j]) active.push_back(j);
    }
    std::vector<LocalFit> fits(active.size());
    parallel_for(active.size(), options.threads, [&](std::size_t s) {
        const auto j = active[s];
        try {
            fits[s] = fit_subdomain(points, kernel, j, blocks.points_in_patch(points.coords, cover.centres[j], cover.radius),
                                    method, options.tau);
        } catch (const Error& e) {
            throw LocalFitError(j, e);
        }
    });
    return assemble_model(std::move(points), kernel, std::move(cover), std::move(fits), method, options);
}

}  // namespace detail

/// Stable PU interpolant: each local problem is solved through the Lanczos
/// approximation of its WSVD basis, stopped by the trace criterion with
/// tolerance options.tau.
inline PuModel fit(PointCloud points, const Kernel& kernel, const FitOptions& options = {}) {
    return detail::fit_pu(std::move(points), kernel, options, LocalMethod::Stable);
}

/// Classical PU interpolant: each local system A_j c = f_j is solved by dense
/// Cholesky (LU if Cholesky fails). Failed systems are flagged Singular and
/// carry NaN coefficients.
inline PuModel fit_standard_pu(PointCloud points, const Kernel& kernel, const FitOptions& options = {}) {
    return detail::fit_pu(std::move(points), kernel, options, LocalMethod::Direct);
}

}  // namespace wsvdpu
