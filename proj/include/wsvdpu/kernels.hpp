#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "errors.hpp"
#include "point.hpp"

namespace wsvdpu {

/// Strictly positive definite radial kernel families.
/// GA and IMQ are C-infinity, M6/M4 are Matern C6/C4, W6/W4 are compactly
/// supported Wendland functions vanishing for r >= 1/epsilon.
enum class KernelFamily { GA, IMQ, M6, M4, W6, W4 };

inline constexpr std::array<KernelFamily, 6> all_kernel_families{
    KernelFamily::GA, KernelFamily::IMQ, KernelFamily::M6,
    KernelFamily::M4, KernelFamily::W6,  KernelFamily::W4};

inline std::string_view to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::GA: return "ga";
        case KernelFamily::IMQ: return "imq";
        case KernelFamily::M6: return "m6";
        case KernelFamily::M4: return "m4";
        case KernelFamily::W6: return "w6";
        case KernelFamily::W4: return "w4";
    }
    return "?";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto family : all_kernel_families) {
        if (to_string(family) == lower) return family;
    }
    throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

/// Radial kernel Phi(x, y) = phi(epsilon * |x - y|).
class Kernel {
public:
    Kernel(KernelFamily family, double epsilon) : family_(family), epsilon_(epsilon) {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw InvalidArgument("shape parameter must be positive and finite");
        }
    }

    KernelFamily family() const noexcept { return family_; }
    double epsilon() const noexcept { return epsilon_; }

    double operator()(double r) const noexcept { return eval(r); }

    double eval(double r) const noexcept {
        const double t = epsilon_ * r;
        switch (family_) {
            case KernelFamily::GA:
                return std::exp(-t * t);
            case KernelFamily::IMQ:
                return 1.0 / std::sqrt(1.0 + t * t);
            case KernelFamily::M6:
                return std::exp(-t) * (((t + 6.0) * t + 15.0) * t + 15.0);
            case KernelFamily::M4:
                return std::exp(-t) * ((t + 3.0) * t + 3.0);
            case KernelFamily::W6: {
                const double s = std::max(1.0 - t, 0.0);
                const double s2 = s * s;
                const double s4 = s2 * s2;
                return s4 * s4 * (((32.0 * t + 25.0) * t + 8.0) * t + 1.0);
            }
            case KernelFamily::W4: {
                const double s = std::max(1.0 - t, 0.0);
                const double s2 = s * s;
                return s2 * s2 * s2 * ((35.0 * t + 18.0) * t + 3.0);
            }
        }
        return 0.0;
    }

    double value_at_zero() const noexcept { return value_at_zero(family_); }

    static constexpr double value_at_zero(KernelFamily family) noexcept {
        switch (family) {
            case KernelFamily::M6: return 15.0;
            case KernelFamily::M4: return 3.0;
            case KernelFamily::W4: return 3.0;
            default: return 1.0;
        }
    }

    /// Distance beyond which the kernel is identically zero (+inf for global kernels).
    double support_radius() const noexcept {
        if (family_ == KernelFamily::W6 || family_ == KernelFamily::W4) return 1.0 / epsilon_;
        return std::numeric_limits<double>::infinity();
    }

    bool compactly_supported() const noexcept { return std::isfinite(support_radius()); }

private:
    KernelFamily family_;
    double epsilon_;
};

/// Relative distance under which two points are considered coincident.
inline constexpr double duplicate_tolerance = 4.0 * std::numeric_limits<double>::epsilon();

/// Symmetric kernel matrix A_ij = Phi(x_i, x_j). Each pair is evaluated once
/// and mirrored, so the result is bit-symmetric. Pairs beyond the kernel
/// support are skipped (entries stay zero).
inline Eigen::MatrixXd kernel_matrix(const Kernel& kernel, std::span<const Point> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double phi0 = kernel.value_at_zero();
    const double support = kernel.support_radius();
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = phi0;
        const Point& xi = points[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Point& xj = points[static_cast<std::size_t>(j)];
            const double r = distance(xi, xj);
            const double scale = std::max({1.0, std::abs(xi.x), std::abs(xi.y)});
            if (r <= duplicate_tolerance * scale) {
                throw DuplicatePoints("points " + std::to_string(i) + " and " + std::to_string(j) +
                                      " coincide");
            }
            if (r >= support) continue;
            const double v = kernel.eval(r);
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

/// Rectangular evaluation matrix E_ij = Phi(y_i, x_j).
inline Eigen::MatrixXd evaluation_matrix(const Kernel& kernel, std::span<const Point> targets,
                                         std::span<const Point> centres) {
    Eigen::MatrixXd e(static_cast<Eigen::Index>(targets.size()),
                      static_cast<Eigen::Index>(centres.size()));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t j = 0; j < centres.size(); ++j) {
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kernel.eval(distance(targets[i], centres[j]));
        }
    }
    return e;
}

}  // namespace wsvdpu
