#pragma once
#include "errors.hpp"
#include "forcing.hpp"
#include "potential.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace floq {

using Mat2 = Eigen::Matrix2cd;

inline Mat2 pauli1() {
    Mat2 s;
    s << 0, 1, 1, 0;
    return s;
}

inline Mat2 pauli2() {
    Mat2 s;
    s << 0, cplx(0, -1), cplx(0, 1), 0;
    return s;
}

// Effective Dirac Floquet Hamiltonian at envelope momentum xi:
// v_D [ (xi1 + A1(T)) sigma1 - (xi2 + A2(T)) sigma2 ].
inline Mat2 dirac_hat(const Vec2& xi, double T, const ForcingProfile& f, double v_D) {
    Vec2 A = f.at(T);
    const double p = v_D * (xi.x() + A.x());
    const double q = v_D * (xi.y() + A.y());
    Mat2 H;
    H << 0, cplx(p, q), cplx(p, -q), 0;
    return H;
}

namespace detail {

// exp(-i P) for traceless Hermitian 2x2 P, exactly unitary
inline Mat2 exp_minus_i(const Mat2& P) {
    const double a = P(0, 0).real();
    const cplx b = P(0, 1);
    const double r = std::sqrt(a * a + std::norm(b));
    if (r < 1e-300) return Mat2::Identity();
    const double s = std::sin(r) / r;
    return std::cos(r) * Mat2::Identity() - cplx(0.0, s) * P;
}

} // namespace detail

enum class Scheme { cf4, midpoint2 };

struct PropagateOptions {
    double tol = 1e-10;    // step-halving acceptance on the propagator
    int max_steps = 1 << 22;
    Scheme scheme = Scheme::cf4;
};

// Fixed-step exponential propagator for i dU/dT = dirac_hat(T) U on [0, T_final].
inline Mat2 propagate_fixed(const Vec2& xi, const ForcingProfile& f, double v_D, double T_final,
                            int steps, Scheme scheme = Scheme::cf4) {
    if (steps < 1) throw PreconditionError("propagate: steps must be >= 1");
    const double h = T_final / steps;
    Mat2 U = Mat2::Identity();
    if (scheme == Scheme::midpoint2) {
        for (int s = 0; s < steps; ++s) {
            double t = s * h;
            U = detail::exp_minus_i(h * dirac_hat(xi, t + 0.5 * h, f, v_D)) * U;
        }
        return U;
    }
    // 4th-order commutator-free scheme: two Gauss nodes per step
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
    const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;
    const double a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
    for (int s = 0; s < steps; ++s) {
        double t = s * h;
        Mat2 H1 = dirac_hat(xi, t + c1 * h, f, v_D);
        Mat2 H2 = dirac_hat(xi, t + c2 * h, f, v_D);
        U = detail::exp_minus_i(h * (a1 * H1 + a2 * H2)) *
            detail::exp_minus_i(h * (a2 * H1 + a1 * H2)) * U;
    }
    return U;
}

// Step-halving controlled propagate: refines from `steps` until the halving
// estimate meets opts.tol, then returns the finer result.
inline Mat2 propagate(const Vec2& xi, const ForcingProfile& f, double v_D, double T_final,
                      int steps = 64, const PropagateOptions& opts = {}) {
    if (T_final == 0.0) return Mat2::Identity();
    Mat2 U = propagate_fixed(xi, f, v_D, T_final, steps, opts.scheme);
    while (true) {
        int fine = 2 * steps;
        Mat2 U2 = propagate_fixed(xi, f, v_D, T_final, fine, opts.scheme);
        if ((U2 - U).norm() <= opts.tol) return U2;
        if (fine > opts.max_steps)
            throw NumericalError("propagate: tolerance not met at " + std::to_string(fine) +
                                 " steps, achieved " + std::to_string((U2 - U).norm()));
        steps = fine;
        U = U2;
    }
}

struct Monodromy2 {
    Vec2 xi;
    Mat2 m;
};

inline Monodromy2 monodromy(const Vec2& xi, const ForcingProfile& f, double v_D,
                            const PropagateOptions& opts = {}) {
    Monodromy2 M{xi, propagate(xi, f, v_D, f.T_per(), 64, opts)};
    if ((M.m.adjoint() * M.m - Mat2::Identity()).norm() > 1e-10)
        throw NumericalError("monodromy: unitarity violated");
    if (std::abs(M.m.determinant() - 1.0) > 1e-10)
        throw NumericalError("monodromy: determinant drifted from 1");
    return M;
}

struct FloquetSample {
    Vec2 xi;
    double mu = 0.0;                 // exponent, mu * T_per in [0, pi]
    std::pair<cplx, cplx> multipliers; // (e^{i mu T}, e^{-i mu T})
    Mat2 eigvecs;                    // columns v_plus, v_minus
};

// The multiplier pair of a det-1 unitary is {e^{i theta}, e^{-i theta}};
// we return the representative with theta = mu*T_per in [0, pi].
inline FloquetSample floquet_exponent(const Monodromy2& M, double T_per) {
    if ((M.m.adjoint() * M.m - Mat2::Identity()).norm() > 1e-8)
        throw PreconditionError("floquet_exponent: matrix is not unitary");
    FloquetSample s;
    s.xi = M.xi;
    const double x = std::clamp(0.5 * M.m.trace().real(), -1.0, 1.0);
    const double theta = std::acos(x);
    s.mu = theta / T_per;
    const cplx lp = std::exp(cplx(0.0, theta));
    s.multipliers = {lp, std::conj(lp)};
    if (std::sin(theta) < 1e-9) {
        s.eigvecs = Mat2::Identity(); // M = +-I: canonical basis
        return s;
    }
    Eigen::Vector2cd v1(M.m(0, 1), lp - M.m(0, 0));
    Eigen::Vector2cd v2(lp - M.m(1, 1), M.m(1, 0));
    Eigen::Vector2cd vp = (v1.norm() >= v2.norm()) ? v1 : v2;
    vp.normalize();
    s.eigvecs.col(0) = vp;
    s.eigvecs.col(1) = Eigen::Vector2cd(-std::conj(vp(1)), std::conj(vp(0)));
    return s;
}

inline double exponent_at_zero_analytic(double R, double omega, double v_D) {
    if (!(omega > 0.0)) throw PreconditionError("exponent_at_zero_analytic: omega must be positive");
    return 0.5 * (std::sqrt(omega * omega + 4.0 * R * R * v_D * v_D) - omega);
}

// Arc distance of the multiplier pair from 1, in exponent units.
inline double multiplier_gap(const FloquetSample& s, double T_per) {
    double theta = s.mu * T_per; // in [0, pi]
    return std::min(theta, 2.0 * M_PI - theta) / T_per;
}

struct GapScan {
    double g_tilde = 0.0;
    Vec2 argmin_xi;
    std::vector<FloquetSample> samples;
};

inline GapScan gap_over_disk(const ForcingProfile& f, double v_D, double d0, int n_radial,
                             int n_angular, const PropagateOptions& opts = {}) {
    if (!(d0 > 0.0)) throw PreconditionError("gap_over_disk: d0 must be positive");
    const double T = f.T_per();
    GapScan scan;
    scan.g_tilde = std::numeric_limits<double>::infinity();
    auto visit = [&](const Vec2& xi) {
        auto s = floquet_exponent(monodromy(xi, f, v_D, opts), T);
        double g = multiplier_gap(s, T);
        if (g < scan.g_tilde) {
            scan.g_tilde = g;
            scan.argmin_xi = xi;
        }
        scan.samples.push_back(std::move(s));
    };
    visit(Vec2(0.0, 0.0));
    for (int i = 1; i <= n_radial; ++i) {
        double r = d0 * static_cast<double>(i) / n_radial;
        for (int j = 0; j < n_angular; ++j) {
            double ang = 2.0 * M_PI * j / n_angular;
            visit(r * Vec2(std::cos(ang), std::sin(ang)));
        }
    }
    return scan;
}

// Large-momentum residual of the monodromy against its WKB diagonal limit,
// evaluated in the sigma1 eigenbasis (the basis in which the limit is
// diagonal).
inline double wkb_residual(double xi_scalar, const ForcingProfile& f, double v_D = 1.0,
                           const PropagateOptions& opts = {}) {
    if (!f.zero_mean())
        throw PreconditionError("wkb_residual: forcing must have zero mean over a period");
    if (!(xi_scalar > 0.0)) throw PreconditionError("wkb_residual: xi must be positive");
    const double T = f.T_per();
    Mat2 M = monodromy(Vec2(xi_scalar, 0.0), f, v_D, opts).m;
    Mat2 W;
    W << 1, 1, 1, -1;
    W /= std::sqrt(2.0);
    Mat2 D = Mat2::Zero();
    D(0, 0) = std::exp(cplx(0.0, -v_D * xi_scalar * T));
    D(1, 1) = std::exp(cplx(0.0, v_D * xi_scalar * T));
    return (W * M * W - D).norm();
}

struct CoverageGrid {
    int n_radial = 256;
    int n_angular = 8;
    int bins = 720;
};

// The multiplier phase winds at rate ~ v_D * T_per per unit radius; the
// radial sampling must resolve a fraction of a bin per step or the scan
// aliases and undercounts.
inline CoverageGrid recommended_coverage_grid(const ForcingProfile& f, double v_D, double d0,
                                              int bins = 720, double oversample = 1.5,
                                              int n_angular = 1) {
    CoverageGrid g;
    g.bins = bins;
    g.n_angular = n_angular;
    g.n_radial = std::max(16, static_cast<int>(
        std::ceil(oversample * d0 * v_D * f.T_per() * bins / M_PI)));
    return g;
}

inline double circle_coverage(const ForcingProfile& f, double v_D, double d0,
                              const CoverageGrid& grid = {}, const PropagateOptions& opts = {}) {
    if (!(d0 > 0.0)) throw PreconditionError("circle_coverage: d0 must be positive");
    const double T = f.T_per();
    std::vector<char> hit(grid.bins, 0);
    auto mark = [&](const Vec2& xi) {
        auto s = floquet_exponent(monodromy(xi, f, v_D, opts), T);
        for (double theta : {s.mu * T, 2.0 * M_PI - s.mu * T}) {
            double u = theta / (2.0 * M_PI);
            u -= std::floor(u);
            int b = std::min(grid.bins - 1, static_cast<int>(u * grid.bins));
            hit[b] = 1;
        }
    };
    mark(Vec2(0.0, 0.0));
    for (int i = 1; i <= grid.n_radial; ++i) {
        double r = d0 * static_cast<double>(i) / grid.n_radial;
        for (int j = 0; j < grid.n_angular; ++j) {
            double ang = 2.0 * M_PI * j / grid.n_angular;
            mark(r * Vec2(std::cos(ang), std::sin(ang)));
        }
    }
    int c = 0;
    for (char h : hit) c += h;
    return static_cast<double>(c) / grid.bins;
}

} // namespace floq
