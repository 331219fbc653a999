#pragma once
#include "bloch.hpp"
#include "schrodinger.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace floq {

// Lattice-periodic function with complex Fourier coefficients (products of
// Bloch modes are generally not real, unlike a potential).
struct PeriodicFunction {
    std::map<std::pair<int, int>, cplx> coeffs;

    cplx coeff(int m, int n) const {
        auto it = coeffs.find({m, n});
        return it == coeffs.end() ? cplx(0.0) : it->second;
    }

    static PeriodicFunction from_potential(const FourierPotential& V) {
        PeriodicFunction p;
        p.coeffs = V.coeffs;
        return p;
    }

    static PeriodicFunction constant(cplx c) {
        PeriodicFunction p;
        if (c != 0.0) p.coeffs[{0, 0}] = c;
        return p;
    }

    // conj(a) * b for two coefficient vectors on the same plane-wave basis
    static PeriodicFunction bloch_pair_product(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                                               const PlaneWaveBasis& basis) {
        if (a.size() != basis.dim || b.size() != basis.dim)
            throw PreconditionError("bloch_pair_product: coefficient size mismatch");
        PeriodicFunction p;
        for (int i = 0; i < basis.dim; ++i) {
            auto [mi, ni] = basis.index_list[i];
            for (int j = 0; j < basis.dim; ++j) {
                auto [mj, nj] = basis.index_list[j];
                cplx c = std::conj(a[i]) * b[j];
                if (c != 0.0) p.coeffs[{mj - mi, nj - ni}] += c;
            }
        }
        return p;
    }
};

// complex-valued samples of a periodic function on a supercell grid
inline Eigen::VectorXcd periodic_on_grid(const PeriodicFunction& p, const SupercellGrid& g) {
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(static_cast<long>(g.n) * g.n);
    for (auto& [idx, c] : p.coeffs) {
        auto [m, n] = idx;
        if (std::abs(m) * g.N > g.n / 2 - 1 || std::abs(n) * g.N > g.n / 2 - 1)
            throw PreconditionError("periodic_on_grid: harmonic beyond grid Nyquist");
        spec[static_cast<long>(g.index_of_freq(m * g.N)) * g.n + g.index_of_freq(n * g.N)] += c;
    }
    g.backward(spec);
    return spec;
}

// Scalar band-limited function of the slow variable X, with Fourier support
// on the dual lattice (periodic over one cell in X): q(X) = sum a e^{i xi.X}.
struct BandLimitedScalar {
    struct Mode {
        int p, q;
        cplx a;
    };
    std::vector<Mode> modes;
    double d = 0.0; // declared band limit

    void check_band_limit(const Lattice2D& lat) const {
        for (auto& m : modes)
            if ((m.p * lat.k1 + m.q * lat.k2).norm() > d * (1.0 + 1e-12))
                throw PreconditionError("BandLimitedScalar: mode outside the declared band limit");
    }
};

struct PoissonReport {
    double lhs_re = 0.0, lhs_im = 0.0;
    double rhs_re = 0.0, rhs_im = 0.0;
    double residual = 0.0;
    cplx lhs() const { return {lhs_re, lhs_im}; }
    cplx rhs() const { return {rhs_re, rhs_im}; }
};

// Two-scale averaging identity: int p(x) q(eps x) dx over the supercell
// equals eps^-2 (mean of p over the cell)(int q dX) as long as no nonzero
// dual-lattice vector aliases into the band limit of q.
inline PoissonReport poisson_average(const PeriodicFunction& p, const BandLimitedScalar& q,
                                     double epsilon, const SupercellGrid& g) {
    if (std::abs(epsilon * g.N - 1.0) > 1e-12)
        throw PreconditionError("poisson_average: epsilon must equal 1/N for this supercell");
    q.check_band_limit(g.lat);

    // refuse if some nonzero dual vector lies inside the scaled band limit
    const double reach = epsilon * q.d;
    int span = static_cast<int>(reach / g.lat.k1.norm()) + 1;
    for (int m = -span; m <= span; ++m)
        for (int n = -span; n <= span; ++n) {
            if (m == 0 && n == 0) continue;
            if ((m * g.lat.k1 + n * g.lat.k2).norm() <= reach * (1.0 + 1e-12))
                throw PreconditionError("poisson_average: dual-lattice alias at n = (" +
                                        std::to_string(m) + ", " + std::to_string(n) +
                                        ") inside the band limit; reduce epsilon");
        }

    Eigen::VectorXcd pv = periodic_on_grid(p, g);
    // q(eps x) on the grid: mode (p,q) sits at supercell frequency (p,q)
    Eigen::VectorXcd qspec = Eigen::VectorXcd::Zero(static_cast<long>(g.n) * g.n);
    for (auto& m : q.modes) {
        if (std::abs(m.p) > g.n / 2 - 1 || std::abs(m.q) > g.n / 2 - 1)
            throw PreconditionError("poisson_average: q mode beyond grid Nyquist");
        qspec[static_cast<long>(g.index_of_freq(m.p)) * g.n + g.index_of_freq(m.q)] += m.a;
    }
    g.backward(qspec);

    const double n2 = static_cast<double>(g.n) * g.n;
    cplx lhs = g.supercell_area() / n2 * (pv.array() * qspec.array()).sum();

    cplx q0 = 0.0;
    for (auto& m : q.modes)
        if (m.p == 0 && m.q == 0) q0 += m.a;
    cplx int_q = epsilon * epsilon * g.supercell_area() * q0; // int q over its X-domain
    cplx rhs = p.coeff(0, 0) * int_q / (epsilon * epsilon);

    PoissonReport r;
    r.lhs_re = lhs.real();
    r.lhs_im = lhs.imag();
    r.rhs_re = rhs.real();
    r.rhs_im = rhs.imag();
    double scale = std::max(std::abs(rhs), 1e-30);
    r.residual = std::abs(lhs - rhs) / scale;
    return r;
}

// Orthogonal projection onto the Bloch modes with |E_b(k) - E_D| < width,
// fiber by fiber over the supercell momentum set.
inline WaveField energy_window_project(const WaveField& f, const FourierPotential& V, double E_D,
                                       double width, const PlaneWaveBasis& basis) {
    if (width < 0.0) throw PreconditionError("energy_window_project: width must be >= 0");
    if (std::isinf(width)) return f;
    const auto& g = *f.grid;
    const int N = g.N, n = g.n;

    Eigen::VectorXcd spec = f.values;
    g.forward(spec);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(spec.size());

    if (width > 0.0) {
        for (int ra = 0; ra < N; ++ra)
            for (int rb = 0; rb < N; ++rb) {
                // gather this fiber's coefficients on the Bloch basis harmonics
                Eigen::VectorXcd c = Eigen::VectorXcd::Zero(basis.dim);
                std::vector<long> slot(basis.dim, -1);
                double fiber_norm2 = 0.0;
                for (int i = 0; i < basis.dim; ++i) {
                    auto [m, mm] = basis.index_list[i];
                    int fa = m * N + ra, fb = mm * N + rb;
                    if (fa < -n / 2 || fa >= (n + 1) / 2 || fb < -n / 2 || fb >= (n + 1) / 2)
                        continue;
                    slot[i] = static_cast<long>(g.index_of_freq(fa)) * n + g.index_of_freq(fb);
                    c[i] = spec[slot[i]];
                    fiber_norm2 += std::norm(c[i]);
                }
                if (fiber_norm2 < 1e-28) continue;

                Vec2 kf = f.k0 + (static_cast<double>(ra) / N) * g.lat.k1 +
                          (static_cast<double>(rb) / N) * g.lat.k2;
                auto sys = solve_bands(V, kf, basis.dim, basis);
                Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(basis.dim);
                for (int b = 0; b < basis.dim; ++b) {
                    if (std::abs(sys.energies[b] - E_D) >= width) continue;
                    proj += sys.vectors.col(b) * sys.vectors.col(b).dot(c);
                }
                for (int i = 0; i < basis.dim; ++i)
                    if (slot[i] >= 0) out[slot[i]] = proj[i];
            }
    }

    WaveField r = f;
    g.backward(out);
    r.values = out;
    r.refresh_norm();
    return r;
}

struct BLDecomposition {
    WaveField bl_part;
    WaveField residual;
    double bl_fraction = 0.0; // ||bl||^2 / ||psi||^2
};

// Orthogonal projection onto BL(d0, eps): the span of the modulated Dirac
// pair { e^{i eps xi.x} Phi_j } over representable |xi| <= d0.  Distinct xi
// occupy disjoint discrete frequencies, so one Gram-Schmidt pass on each
// (phi1, phi2) pair makes the split exactly orthogonal.
inline BLDecomposition bl_project(const WaveField& psi, const DiracPointData& d, double epsilon,
                                  double d0, const PlaneWaveBasis& basis) {
    const auto& g = *psi.grid;
    const int N = g.N, n = g.n;
    if (std::abs(epsilon * N - 1.0) > 1e-12)
        throw PreconditionError("bl_project: epsilon must equal 1/N for this supercell");
    if ((psi.k0 - d.k_D).norm() > 1e-9)
        throw PreconditionError("bl_project: field quasi-momentum must sit at the Dirac point");

    // orthonormal pair on the basis harmonics
    Eigen::VectorXcd u1 = d.phi1.normalized();
    Eigen::VectorXcd u2 = d.phi2 - u1 * u1.dot(d.phi2);
    u2.normalize();

    Eigen::VectorXcd spec = psi.values;
    g.forward(spec);
    Eigen::VectorXcd blspec = Eigen::VectorXcd::Zero(spec.size());

    int span = static_cast<int>(d0 / g.lat.k1.norm()) + 1;
    for (int p = -span; p <= span; ++p)
        for (int q = -span; q <= span; ++q) {
            if ((p * g.lat.k1 + q * g.lat.k2).norm() > d0) continue;
            if (std::abs(p) > N / 2 - 1 || std::abs(q) > N / 2 - 1) continue;
            Eigen::VectorXcd c = Eigen::VectorXcd::Zero(basis.dim);
            std::vector<long> slot(basis.dim, -1);
            for (int i = 0; i < basis.dim; ++i) {
                auto [m, mm] = basis.index_list[i];
                int fa = m * N + p, fb = mm * N + q;
                if (fa < -n / 2 || fa >= (n + 1) / 2 || fb < -n / 2 || fb >= (n + 1) / 2)
                    continue;
                slot[i] = static_cast<long>(g.index_of_freq(fa)) * n + g.index_of_freq(fb);
                c[i] = spec[slot[i]];
            }
            Eigen::VectorXcd proj = u1 * u1.dot(c) + u2 * u2.dot(c);
            for (int i = 0; i < basis.dim; ++i)
                if (slot[i] >= 0) blspec[slot[i]] = proj[i];
        }

    BLDecomposition out;
    out.bl_part = psi;
    out.residual = psi;
    Eigen::VectorXcd rspec = spec - blspec;
    g.backward(blspec);
    g.backward(rspec);
    out.bl_part.values = blspec;
    out.residual.values = rspec;
    out.bl_part.refresh_norm();
    out.residual.refresh_norm();
    double tot = psi.norm_l2 * psi.norm_l2;
    out.bl_fraction = tot > 0.0 ? (out.bl_part.norm_l2 * out.bl_part.norm_l2) / tot : 0.0;
    return out;
}

namespace detail {

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2 || x.size() != y.size())
        throw PreconditionError("loglog_slope: need >= 2 matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace detail

struct ContinuumEnvelopeSpec {
    double sigma = 1.0; // Gaussian width of the radial profile
    cplx a1 = 1.0, a2 = 0.0;
};

struct ScalingRow {
    double eps;
    double u_norm;
    double residual_norm;
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double slope = 0.0; // d log(residual) / d log(eps)
};

// Window-complement residual of band-limited packets, resolved in the
// continuum fiber variable: for each quadrature node xi with |xi| <= d0 the
// packet's fiber at K + eps*xi is the frozen Dirac pair; the residual keeps
// its components on Bloch modes with |E_b - E_D| >= eps.
inline ScalingTable projection_scaling_check(const ContinuumEnvelopeSpec& env,
                                             const DiracPointData& d, double d0,
                                             const std::vector<double>& eps_list,
                                             const FourierPotential& V,
                                             const PlaneWaveBasis& basis,
                                             const NoFoldReport& no_fold, int n_radial = 16,
                                             int n_angular = 12) {
    if (!no_fold.holds)
        throw PreconditionError(
            "projection_scaling_check: no-fold condition fails, worst gap " +
            std::to_string(no_fold.worst_gap) + " at k = (" + std::to_string(no_fold.worst_k.x()) +
            ", " + std::to_string(no_fold.worst_k.y()) + ")");
    if (eps_list.size() < 2)
        throw PreconditionError("projection_scaling_check: need at least two eps values");

    Eigen::VectorXcd u1 = d.phi1.normalized();
    Eigen::VectorXcd u2 = d.phi2 - u1 * u1.dot(d.phi2);
    u2.normalize();

    ScalingTable table;
    std::vector<double> xs, ys;
    for (double eps : eps_list) {
        double mass = 0.0, res2 = 0.0;
        for (int i = 1; i <= n_radial; ++i) {
            double r = d0 * (i - 0.5) / n_radial;
            double w = std::exp(-r * r / (2.0 * env.sigma * env.sigma));
            double quad = r * (d0 / n_radial) * (2.0 * M_PI / n_angular); // polar measure
            for (int j = 0; j < n_angular; ++j) {
                double ang = 2.0 * M_PI * j / n_angular;
                Vec2 xi(r * std::cos(ang), r * std::sin(ang));
                Eigen::VectorXcd c = w * (env.a1 * u1 + env.a2 * u2);
                auto sys = solve_bands(V, d.k_D + eps * xi, basis.dim, basis);
                double out2 = 0.0;
                for (int b = 0; b < basis.dim; ++b)
                    if (std::abs(sys.energies[b] - d.E_D) >= eps)
                        out2 += std::norm(sys.vectors.col(b).dot(c));
                mass += quad * c.squaredNorm();
                res2 += quad * out2;
            }
        }
        double un = std::sqrt(mass), rn = std::sqrt(res2);
        table.rows.push_back({eps, un, rn});
        xs.push_back(eps);
        ys.push_back(rn);
    }
    table.slope = detail::loglog_slope(xs, ys);
    return table;
}

struct QuasiEnergyWindow {
    double lo = 0.0, hi = 0.0; // phase interval in [0, 2pi), may wrap

    bool contains(double nu) const {
        double u = std::fmod(nu, 2.0 * M_PI);
        if (u < 0.0) u += 2.0 * M_PI;
        if (lo <= hi) return u >= lo && u <= hi;
        return u >= lo || u <= hi; // wrapped interval
    }
    double center() const {
        double c = lo <= hi ? 0.5 * (lo + hi) : 0.5 * (lo + hi + 2.0 * M_PI);
        return std::fmod(c, 2.0 * M_PI);
    }
    double half_width() const {
        double w = lo <= hi ? hi - lo : hi - lo + 2.0 * M_PI;
        return 0.5 * w;
    }
};

struct GapScanMode {
    double nu = 0.0;          // multiplier phase: lambda = e^{-i nu}
    bool in_window = false;
    bool contrast = false;    // far from the window (distance > 2 half-widths)
    double bl_fraction = 0.0;
    double residual_fraction = 0.0; // ||r|| / ||u||
};

struct GapScanPerK {
    Vec2 k;
    std::vector<GapScanMode> modes;
    bool empty_selection = false;
};

struct EffectiveGapReport {
    std::vector<GapScanPerK> per_k;
    double in_window_min = 0.0, in_window_median = 0.0;     // residual fractions
    double contrast_min = 0.0, contrast_median = 0.0;
    int in_window_count = 0, contrast_count = 0;
};

// Theorem-5.1-style harness: full Bloch monodromy per k, multiplier phases
// against a quasi-energy window, and the BL-projection residual of every
// Floquet mode synthesized on the supercell.
inline EffectiveGapReport effective_gap_scan(const FourierPotential& V, const DiracPointData& d,
                                             const ForcingProfile& f, double epsilon, double d0,
                                             const QuasiEnergyWindow& window,
                                             const std::vector<Vec2>& k_set,
                                             const PlaneWaveBasis& basis, int pts_per_cell = 16,
                                             const BlochMonodromyOptions& mopts = {}) {
    const int N = static_cast<int>(std::lround(1.0 / epsilon));
    if (std::abs(epsilon * N - 1.0) > 1e-12)
        throw PreconditionError("effective_gap_scan: epsilon must be 1/N");
    auto grid = std::make_shared<SupercellGrid>(make_honeycomb_lattice(), N, pts_per_cell);

    EffectiveGapReport report;
    std::vector<double> in_res, far_res;
    for (const Vec2& k : k_set) {
        // k must sit on the supercell momentum set relative to the Dirac point
        Vec2 fr = N * dual_fractional(k - d.k_D, grid->lat);
        int sa = static_cast<int>(std::lround(fr.x())), sb = static_cast<int>(std::lround(fr.y()));
        if ((fr - Vec2(sa, sb)).norm() > 1e-9)
            throw PreconditionError("effective_gap_scan: k not on the supercell momentum set");

        Eigen::MatrixXcd M = schrodinger_monodromy_bloch(V, f, epsilon, k, basis, mopts);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
        if (es.info() != Eigen::Success)
            throw NumericalError("effective_gap_scan: eigensolver failed");

        GapScanPerK row;
        row.k = k;
        for (int b = 0; b < basis.dim; ++b) {
            GapScanMode mode;
            mode.nu = -std::arg(es.eigenvalues()[b]);
            if (mode.nu < 0.0) mode.nu += 2.0 * M_PI;
            mode.in_window = window.contains(mode.nu);
            double dist = std::abs(std::remainder(mode.nu - window.center(), 2.0 * M_PI));
            mode.contrast = dist > 2.0 * window.half_width();

            // synthesize the Floquet mode on the supercell and project
            WaveField u = make_field(grid, d.k_D);
            Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(u.values.size());
            Eigen::VectorXcd vec = es.eigenvectors().col(b);
            bool fits = true;
            for (int i = 0; i < basis.dim && fits; ++i) {
                auto [m, n] = basis.index_list[i];
                int fa = m * N + sa, fb = n * N + sb;
                if (std::abs(fa) > grid->n / 2 - 1 || std::abs(fb) > grid->n / 2 - 1) {
                    fits = false;
                    break;
                }
                spec[static_cast<long>(grid->index_of_freq(fa)) * grid->n +
                     grid->index_of_freq(fb)] = vec[i];
            }
            if (!fits)
                throw PreconditionError("effective_gap_scan: basis exceeds grid Nyquist; "
                                        "increase pts_per_cell");
            grid->backward(spec);
            u.values = spec;
            u.refresh_norm();

            auto dec = bl_project(u, d, epsilon, d0, basis);
            mode.bl_fraction = dec.bl_fraction;
            mode.residual_fraction = u.norm_l2 > 0.0 ? dec.residual.norm_l2 / u.norm_l2 : 0.0;

            if (mode.in_window) in_res.push_back(mode.residual_fraction);
            if (mode.contrast) far_res.push_back(mode.residual_fraction);
            row.modes.push_back(mode);
        }
        row.empty_selection = std::none_of(row.modes.begin(), row.modes.end(),
                                           [](const GapScanMode& m) { return m.in_window; });
        report.per_k.push_back(std::move(row));
    }

    auto summarize = [](std::vector<double>& v, double& mn, double& med, int& count) {
        count = static_cast<int>(v.size());
        if (v.empty()) return;
        std::sort(v.begin(), v.end());
        mn = v.front();
        med = v[v.size() / 2];
    };
    summarize(in_res, report.in_window_min, report.in_window_median, report.in_window_count);
    summarize(far_res, report.contrast_min, report.contrast_median, report.contrast_count);
    return report;
}

} // namespace floq
