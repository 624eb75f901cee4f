#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace wsvdpu {

enum class Termination { Breakdown, TraceTolerance, FullRank };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Breakdown: return "breakdown";
        case Termination::TraceTolerance: return "trace-tolerance";
        case Termination::FullRank: return "full-rank";
    }
    return "?";
}

/// Default trace-criterion tolerance.
inline constexpr double default_tau = 1e-14;
/// beta below ||A||_1 times this counts as an exact breakdown.
inline constexpr double breakdown_factor = 1e-14;
/// Singular triples with sigma_k <= sigma_1 times this are discarded.
inline constexpr double sigma_floor = 1e-16;

/// Output of m Lanczos steps: A P_m = P_{m+1} Hbar_m.
///
/// `basis` holds p_1..p_{m+1} as columns. When the process stops by breakdown
/// or at full rank there is no further Krylov direction and the last column is
/// zero. alpha[i] is the diagonal entry of step i+1; beta[i] is the norm of the
/// residual produced by that step, so beta[m-1] is the trailing entry of Hbar.
struct LanczosFactorization {
    Eigen::MatrixXd basis;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::size_t m = 0;
    Termination terminated_by = Termination::FullRank;
    double rhs_norm = 0.0;

    /// (m+1) x m tridiagonal with alpha on the diagonal, beta on both
    /// off-diagonals and beta[m-1] in the appended last row.
    Eigen::MatrixXd hbar() const {
        const auto mm = static_cast<Eigen::Index>(m);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(mm + 1, mm);
        for (Eigen::Index i = 0; i < mm; ++i) {
            h(i, i) = alpha[static_cast<std::size_t>(i)];
            h(i + 1, i) = beta[static_cast<std::size_t>(i)];
            if (i + 1 < mm) h(i, i + 1) = beta[static_cast<std::size_t>(i)];
        }
        return h;
    }

    /// |phi0 - (1/n) sum alpha|, the quantity the trace criterion compares with tau.
    double trace_gap(double phi0) const {
        double s = 0.0;
        for (double a : alpha) s += a;
        return std::abs(phi0 - s / static_cast<double>(basis.rows()));
    }
};

/// Symmetric Lanczos process started from p_1 = f / |f|_2, with full
/// reorthogonalisation. Stops at the first step i where
///   i == n                                  (FullRank),
///   beta_{i+1} < ||A||_1 * 1e-14            (Breakdown), or
///   |phi0 - (1/n) sum_{k<=i} alpha_k| < tau (TraceTolerance),
/// checked in that order.
inline LanczosFactorization lanczos(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                    const Eigen::Ref<const Eigen::VectorXd>& f, double phi0, double tau) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || f.size() != n) throw LengthMismatch("lanczos: matrix and rhs sizes differ");
    if (n == 0) throw InvalidArgument("lanczos: empty system");
    if (!(tau >= 0.0)) throw InvalidArgument("lanczos: tau must be nonnegative");
    const double fnorm = f.norm();
    if (!(fnorm > 0.0)) throw ZeroRhs("right-hand side has zero norm");

    LanczosFactorization out;
    out.rhs_norm = fnorm;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n + 1);
    p.col(0) = f / fnorm;
    const double threshold = a.cwiseAbs().colwise().sum().maxCoeff() * breakdown_factor;

    Eigen::VectorXd w(n);
    Eigen::VectorXd proj;
    double beta_prev = 0.0;
    double alpha_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        w.noalias() = a * p.col(i);
        if (i > 0) w -= beta_prev * p.col(i - 1);
        const double alpha = w.dot(p.col(i));
        w -= alpha * p.col(i);

        // Gram-Schmidt against every previous direction, repeated while it
        // removes more than ~30% of the norm.
        for (int pass = 0; pass < 3; ++pass) {
            const double before = w.norm();
            proj.noalias() = p.leftCols(i + 1).transpose() * w;
            w.noalias() -= p.leftCols(i + 1) * proj;
            if (w.norm() >= before * M_SQRT1_2) break;
        }
        const double beta = w.norm();

        out.alpha.push_back(alpha);
        out.beta.push_back(beta);
        alpha_sum += alpha;
        out.m = static_cast<std::size_t>(i + 1);

        if (i + 1 == n) {
            out.terminated_by = Termination::FullRank;
            break;
        }
        if (beta < threshold) {
            out.terminated_by = Termination::Breakdown;
            break;
        }
        p.col(i + 1) = w / beta;
        if (std::abs(phi0 - alpha_sum / static_cast<double>(n)) < tau) {
            out.terminated_by = Termination::TraceTolerance;
            break;
        }
        beta_prev = beta;
    }
    out.basis = p.leftCols(static_cast<Eigen::Index>(out.m) + 1);
    return out;
}

/// Thin SVD Hbar_m = U Sigma V^T with U of size (m+1) x m (last column of the
/// full U dropped) and sigma nonincreasing.
struct TridiagonalSvd {
    Eigen::MatrixXd u;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd v;
};

inline TridiagonalSvd svd_tridiagonal(const LanczosFactorization& fact) {
    if (fact.m == 0) throw InvalidArgument("svd_tridiagonal: empty factorization");
    const Eigen::MatrixXd h = fact.hbar();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
        throw SvdFailure("tridiagonal SVD did not converge");
    }
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Stable basis of the local kernel space.
///
/// `coefficients` (D) expresses each basis function in kernel translates,
/// `values` (V) holds the basis values at the nodes, so V = A D and
/// V^T V = diag(sigma). For the Lanczos path `left`/`right` keep the retained
/// singular vectors of Hbar; they are empty for the dense path.
struct StableLocalBasis {
    Eigen::MatrixXd coefficients;
    Eigen::MatrixXd values;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;
    std::size_t dropped = 0;  ///< trailing triples removed by the sigma floor

    std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }
};

namespace detail {

inline Eigen::Index retained_rank(const Eigen::VectorXd& sigma) {
    if (sigma.size() == 0 || !(sigma(0) > 0.0) || !std::isfinite(sigma(0))) {
        throw RankCollapse("leading singular value is not positive");
    }
    const double floor = sigma(0) * sigma_floor;
    Eigen::Index k = 0;
    while (k < sigma.size() && sigma(k) > floor) ++k;
    return k;
}

}  // namespace detail

/// Approximate WSVD basis from a Lanczos factorization of A:
/// D = P_m V_m Sigma^{-1/2}, V = P_{m+1} U_m Sigma^{1/2}.
inline StableLocalBasis stable_basis(const Eigen::Ref<const Eigen::MatrixXd>& a, const LanczosFactorization& fact,
                                     const TridiagonalSvd& svd) {
    if (a.rows() != fact.basis.rows()) throw LengthMismatch("stable_basis: factorization is for another matrix");
    const Eigen::Index k = detail::retained_rank(svd.sigma);
    const auto m = static_cast<Eigen::Index>(fact.m);
    StableLocalBasis out;
    out.sigma = svd.sigma.head(k);
    out.left = svd.u.leftCols(k);
    out.right = svd.v.leftCols(k);
    out.dropped = static_cast<std::size_t>(svd.sigma.size() - k);
    const Eigen::VectorXd root = out.sigma.cwiseSqrt();
    out.coefficients = fact.basis.leftCols(m) * out.right * root.cwiseInverse().asDiagonal();
    out.values = fact.basis * out.left * root.asDiagonal();
    return out;
}

inline StableLocalBasis stable_basis(const Eigen::Ref<const Eigen::MatrixXd>& a, const LanczosFactorization& fact) {
    return stable_basis(a, fact, svd_tridiagonal(fact));
}

/// Dense WSVD basis with uniform weights: A = Q Sigma Q^T, D = Q Sigma^{-1/2},
/// V = Q Sigma^{1/2}. Eigenvalues under the sigma floor (including negative
/// roundoff) are discarded.
inline StableLocalBasis full_wsvd(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    if (a.rows() != a.cols() || a.rows() == 0) throw InvalidArgument("full_wsvd: need a nonempty square matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    if (eig.info() != Eigen::Success) throw SvdFailure("symmetric eigensolver did not converge");
    const Eigen::VectorXd sigma = eig.eigenvalues().reverse();
    const Eigen::MatrixXd q = eig.eigenvectors().rowwise().reverse();
    const Eigen::Index k = detail::retained_rank(sigma);

    StableLocalBasis out;
    out.sigma = sigma.head(k);
    out.dropped = static_cast<std::size_t>(sigma.size() - k);
    const Eigen::VectorXd root = out.sigma.cwiseSqrt();
    out.coefficients = q.leftCols(k) * root.cwiseInverse().asDiagonal();
    out.values = q.leftCols(k) * root.asDiagonal();
    return out;
}

/// Kernel-translate coefficients of the Lanczos stable approximant,
/// c = |f| P_m V_m Sigma^{-1} U_m^T e_1.
inline Eigen::VectorXd stable_coefficients(const StableLocalBasis& basis, const LanczosFactorization& fact,
                                           double f_norm) {
    const auto m = static_cast<Eigen::Index>(fact.m);
    const Eigen::VectorXd first_row = basis.left.row(0).transpose();
    const Eigen::VectorXd y = basis.right * (first_row.cwiseQuotient(basis.sigma) * f_norm);
    return fact.basis.leftCols(m) * y;
}

/// Coefficients of sum_k sigma_k^{-1} (f, u_k)_{l2} u_k for any stable basis,
/// i.e. c = D Sigma^{-1} V^T f.
inline Eigen::VectorXd projection_coefficients(const StableLocalBasis& basis,
                                               const Eigen::Ref<const Eigen::VectorXd>& f) {
    if (f.size() != basis.values.rows()) throw LengthMismatch("projection_coefficients: rhs size");
    const Eigen::VectorXd proj = basis.values.transpose() * f;
    return basis.coefficients * proj.cwiseQuotient(basis.sigma);
}

/// Result of one local stable solve.
struct LocalSolve {
    Eigen::VectorXd coefficients;
    std::size_t m_used = 0;
    Termination terminated_by = Termination::FullRank;
};

/// Lanczos -> SVD of Hbar -> stable basis -> coefficients for one local system.
/// A zero right-hand side gives the zero interpolant with m_used = 0.
inline LocalSolve solve_stable(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::VectorXd>& f,
                               double phi0, double tau) {
    LocalSolve out;
    const double fnorm = f.norm();
    if (!(fnorm > 0.0)) {
        out.coefficients = Eigen::VectorXd::Zero(f.size());
        out.terminated_by = Termination::Breakdown;
        return out;
    }
    if (a.rows() == 1) {
        out.coefficients = Eigen::VectorXd::Constant(1, f(0) / a(0, 0));
        out.m_used = 1;
        return out;
    }
    const auto fact = lanczos(a, f, phi0, tau);
    const auto svd = svd_tridiagonal(fact);
    const auto basis = stable_basis(a, fact, svd);
    out.coefficients = stable_coefficients(basis, fact, fnorm);
    out.m_used = basis.rank();
    out.terminated_by = fact.terminated_by;
    return out;
}

}  // namespace wsvdpu
