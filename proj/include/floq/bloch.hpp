#pragma once
#include "errors.hpp"
#include "potential.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

namespace floq {

// Truncated plane-wave basis for the k-pseudoperiodic fiber spaces:
// indices (m,n) with |m k1 + n k2| <= cutoff_radius * |k1|, lexicographic.
struct PlaneWaveBasis {
    int cutoff_radius = 0;
    std::vector<std::pair<int, int>> index_list;
    std::vector<Vec2> g; // cached dual vectors per index
    int dim = 0;

    int find(int m, int n) const {
        auto it = lookup_.find(key(m, n));
        return it == lookup_.end() ? -1 : it->second;
    }

    int max_abs_index() const {
        int mx = 0;
        for (auto& [m, n] : index_list) mx = std::max({mx, std::abs(m), std::abs(n)});
        return mx;
    }

    static PlaneWaveBasis make(const Lattice2D& lat, int n_c) {
        if (n_c < 0) throw PreconditionError("PlaneWaveBasis: cutoff must be nonnegative");
        PlaneWaveBasis b;
        b.cutoff_radius = n_c;
        const double rmax = n_c * lat.k1.norm() + 1e-9;
        const int span = 2 * n_c + 2;
        for (int m = -span; m <= span; ++m)
            for (int n = -span; n <= span; ++n) {
                Vec2 gv = m * lat.k1 + n * lat.k2;
                if (gv.norm() <= rmax) {
                    b.lookup_[key(m, n)] = static_cast<int>(b.index_list.size());
                    b.index_list.emplace_back(m, n);
                    b.g.push_back(gv);
                }
            }
        b.dim = static_cast<int>(b.index_list.size());
        return b;
    }

  private:
    static std::int64_t key(int m, int n) {
        return (static_cast<std::int64_t>(m) << 32) ^ static_cast<std::uint32_t>(n);
    }
    std::unordered_map<std::int64_t, int> lookup_;
};

struct BlochEigenSystem {
    Vec2 k;
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXcd vectors;  // columns orthonormal, plane-wave coefficients
};

inline Eigen::MatrixXcd assemble_hk(const FourierPotential& V, const Vec2& k,
                                    const PlaneWaveBasis& basis) {
    if (basis.dim < 1) throw PreconditionError("assemble_hk: empty basis");
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(basis.dim, basis.dim);
    for (int i = 0; i < basis.dim; ++i) H(i, i) = (k + basis.g[i]).squaredNorm();
    for (int i = 0; i < basis.dim; ++i) {
        auto [mi, ni] = basis.index_list[i];
        for (int j = 0; j < basis.dim; ++j) {
            if (i == j) continue;
            auto [mj, nj] = basis.index_list[j];
            cplx c = V.coeff(mi - mj, ni - nj);
            if (c != 0.0) H(i, j) += c;
        }
    }
    return H;
}

inline BlochEigenSystem solve_bands(const FourierPotential& V, const Vec2& k, int n_bands,
                                    const PlaneWaveBasis& basis) {
    if (n_bands < 1 || n_bands > basis.dim)
        throw PreconditionError("solve_bands: n_bands out of range");
    Eigen::MatrixXcd H = assemble_hk(V, k, basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
        throw NumericalError("solve_bands: eigensolver failed, dim=" + std::to_string(basis.dim));
    BlochEigenSystem sys;
    sys.k = k;
    sys.energies = es.eigenvalues().head(n_bands);
    sys.vectors = es.eigenvectors().leftCols(n_bands);
    return sys;
}

struct BandPathRow {
    double arclength;
    Vec2 k;
    Eigen::VectorXd energies;
};

inline std::vector<BandPathRow> band_path(const FourierPotential& V,
                                          const std::vector<Vec2>& waypoints, int samples_per_leg,
                                          int n_bands, const PlaneWaveBasis& basis) {
    if (waypoints.size() < 2) throw PreconditionError("band_path: need at least two waypoints");
    std::vector<BandPathRow> out;
    double arc = 0.0;
    for (std::size_t leg = 0; leg + 1 < waypoints.size(); ++leg) {
        Vec2 a = waypoints[leg], b = waypoints[leg + 1];
        double len = (b - a).norm();
        if (len <= 1e-14) continue; // degenerate leg
        int first = out.empty() ? 0 : 1; // avoid duplicating shared endpoints
        for (int s = first; s <= samples_per_leg; ++s) {
            double f = static_cast<double>(s) / samples_per_leg;
            Vec2 k = a + f * (b - a);
            auto sys = solve_bands(V, k, n_bands, basis);
            out.push_back({arc + f * len, k, sys.energies});
        }
        arc += len;
    }
    return out;
}

struct DiracOptions {
    double degeneracy_tol = 1e-8;
    double v_min = 1e-6;
    double isolation_factor = 100.0; // third band must be this many tols away
};

struct DiracPointData {
    Vec2 k_D;
    std::pair<int, int> band_pair; // 1-based (b, b+1)
    double E_D = 0.0;
    double v_D = 0.0;
    Eigen::VectorXcd phi1, phi2;
    double degeneracy_residual = 0.0;
};

namespace detail {

// Coefficient-level action of f(x) -> f(R* x) on the fiber at momentum kc:
// the coefficient at g moves to the index of R*^T (kc+g) - kc (a dual vector).
inline Eigen::VectorXcd rotate_fiber(const Eigen::VectorXcd& c, const Vec2& kc,
                                     const PlaneWaveBasis& basis, const Lattice2D& lat) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(basis.dim);
    for (int i = 0; i < basis.dim; ++i) {
        if (c[i] == 0.0) continue;
        // R*^T = (R*)^-1 = R* applied twice
        Vec2 gp = rotate_R(rotate_R(kc + basis.g[i])) - kc;
        auto [m, n] = dual_index_of(gp, lat);
        int j = basis.find(m, n);
        if (j >= 0) out[j] += c[i]; // indices leaving the cutoff set are dropped
    }
    return out;
}

// <Phi_a, -2i grad Phi_b> on the fiber at kc; grad acts as i(kc+g).
inline Eigen::Vector2cd grad_pairing(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                                     const Vec2& kc, const PlaneWaveBasis& basis) {
    Eigen::Vector2cd F = Eigen::Vector2cd::Zero();
    for (int i = 0; i < basis.dim; ++i) {
        cplx w = 2.0 * std::conj(a[i]) * b[i];
        F[0] += w * (kc + basis.g[i]).x();
        F[1] += w * (kc + basis.g[i]).y();
    }
    return F;
}

inline Eigen::VectorXcd conjugate_parity(const Eigen::VectorXcd& c) {
    return c.conjugate(); // coefficient-level image of x -> conj(f(-x))
}

} // namespace detail

inline std::pair<double, Eigen::Vector2cd>
fermi_velocity_inner_product(const DiracPointData& d, const PlaneWaveBasis& basis) {
    Eigen::Vector2cd F = detail::grad_pairing(d.phi1, d.phi2, d.k_D, basis);
    cplx w = 0.5 * (F[0] - cplx(0.0, 1.0) * F[1]);
    double vd = w.real();
    Eigen::Vector2cd expect(vd, cplx(0.0, vd));
    if ((F - expect).norm() > 1e-6 * std::max(1.0, std::abs(vd)))
        throw NumericalError("fermi_velocity_inner_product: pairing vector is not v_D(1,i)");
    return {vd, F};
}

inline DiracPointData find_dirac_point(const FourierPotential& V, const PlaneWaveBasis& basis,
                                       const Lattice2D& lat, const DiracOptions& opt = {},
                                       const Vec2* k_guess = nullptr) {
    if (!check_symmetries(V, lat).all())
        throw PreconditionError("find_dirac_point: potential is not honeycomb-symmetric");
    Vec2 kc = k_guess ? *k_guess : high_symmetry_points(lat).K;

    auto sys = solve_bands(V, kc, basis.dim, basis);
    const auto& E = sys.energies;

    int b = -1;
    double min_split = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < E.size(); ++i) {
        double split = E[i + 1] - E[i];
        min_split = std::min(min_split, split);
        if (split > opt.degeneracy_tol) continue;
        // isolated pair: neighbors well separated (rejects e.g. the free
        // operator's triple degeneracy at K)
        double iso = opt.isolation_factor * opt.degeneracy_tol;
        bool below_ok = (i == 0) || (E[i] - E[i - 1] > iso);
        bool above_ok = (i + 2 >= E.size()) || (E[i + 2] - E[i + 1] > iso);
        if (below_ok && above_ok) { b = i; break; }
    }
    if (b < 0)
        throw NumericalError("find_dirac_point: no isolated degenerate pair at K; minimal splitting " +
                             std::to_string(min_split));

    DiracPointData d;
    d.k_D = kc;
    d.band_pair = {b + 1, b + 2};
    d.E_D = 0.5 * (E[b] + E[b + 1]);
    d.degeneracy_residual = E[b + 1] - E[b];

    // Diagonalize the 2pi/3-rotation restricted to the 2D eigenspace; its
    // eigenvalues are tau = exp(2pi i/3) and conj(tau).
    Eigen::MatrixXcd pair(basis.dim, 2);
    pair.col(0) = sys.vectors.col(b);
    pair.col(1) = sys.vectors.col(b + 1);
    Eigen::MatrixXcd rho(2, 2);
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXcd r = detail::rotate_fiber(pair.col(j), kc, basis, lat);
        rho(0, j) = pair.col(0).dot(r);
        rho(1, j) = pair.col(1).dot(r);
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(rho);
    const cplx tau = std::exp(cplx(0.0, 2.0 * M_PI / 3.0));
    int pick = std::abs(ces.eigenvalues()[0] - tau) < std::abs(ces.eigenvalues()[1] - tau) ? 0 : 1;

    auto build = [&](int which) {
        Eigen::VectorXcd p1 = pair * ces.eigenvectors().col(which);
        p1.normalize();
        Eigen::VectorXcd p2 = detail::conjugate_parity(p1);
        // clean residual overlap from truncation
        p2 -= p1 * p1.dot(p2);
        p2.normalize();
        return std::pair{p1, p2};
    };

    auto [p1, p2] = build(pick);
    Eigen::Vector2cd F = detail::grad_pairing(p1, p2, kc, basis);
    // wrong helicity (pairing along (1,-i)) means the tau / conj(tau)
    // assignment must be swapped
    if (std::abs(F[1] - cplx(0.0, 1.0) * F[0]) > std::abs(F[1] + cplx(0.0, 1.0) * F[0]))
        std::tie(p1, p2) = build(1 - pick);

    // fix the common phase so the pairing is exactly v_D (1, i), v_D >= 0
    F = detail::grad_pairing(p1, p2, kc, basis);
    cplx w = 0.5 * (F[0] - cplx(0.0, 1.0) * F[1]);
    double theta = 0.5 * std::arg(w);
    p1 *= std::exp(cplx(0.0, theta));
    p2 = detail::conjugate_parity(p1);
    p2 -= p1 * p1.dot(p2);
    p2.normalize();

    d.phi1 = p1;
    d.phi2 = p2;
    auto [vd, Fv] = fermi_velocity_inner_product(d, basis);
    if (vd < opt.v_min)
        throw NumericalError("find_dirac_point: degenerate cone, v_D = " + std::to_string(vd));
    d.v_D = vd;
    return d;
}

struct ConeFit {
    double v_fit = 0.0;
    double isotropy_spread = 0.0;
    double slope_plus = 0.0;
    double slope_minus = 0.0;
    bool asymptotic_warning = false;
};

inline ConeFit fermi_velocity_cone_fit(const FourierPotential& V, const DiracPointData& d,
                                       const std::vector<double>& radii, int n_directions,
                                       const PlaneWaveBasis& basis) {
    if (radii.empty() || n_directions < 1)
        throw PreconditionError("fermi_velocity_cone_fit: empty sampling plan");
    const int bm = d.band_pair.first - 1, bp = d.band_pair.second - 1;
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    double sum_dir = 0.0, sum_p = 0.0, sum_m = 0.0;
    for (int j = 0; j < n_directions; ++j) {
        double ang = 2.0 * M_PI * j / n_directions;
        Vec2 u(std::cos(ang), std::sin(ang));
        double num_p = 0.0, num_m = 0.0, den = 0.0;
        for (double r : radii) {
            auto sys = solve_bands(V, d.k_D + r * u, bp + 1, basis);
            num_p += r * std::abs(sys.energies[bp] - d.E_D);
            num_m += r * std::abs(sys.energies[bm] - d.E_D);
            den += r * r;
        }
        double sp = num_p / den, sm = num_m / den, s = 0.5 * (sp + sm);
        smin = std::min(smin, s);
        smax = std::max(smax, s);
        sum_dir += s;
        sum_p += sp;
        sum_m += sm;
    }
    ConeFit fit;
    fit.v_fit = sum_dir / n_directions;
    fit.isotropy_spread = smax / smin - 1.0;
    fit.slope_plus = sum_p / n_directions;
    fit.slope_minus = sum_m / n_directions;
    fit.asymptotic_warning = fit.isotropy_spread > 0.10;
    return fit;
}

struct NoFoldReport {
    bool holds = false;
    Vec2 worst_k;
    double worst_gap = 0.0;
};

inline NoFoldReport check_no_fold(const FourierPotential& V, double E_D, double delta,
                                  double delta0, int k_grid_n, const PlaneWaveBasis& basis,
                                  const Lattice2D& lat, bool exclude_k_prime = true) {
    auto hs = high_symmetry_points(lat);
    if (delta >= hs.K.norm()) throw PreconditionError("check_no_fold: delta must be < |K|");
    NoFoldReport rep;
    rep.worst_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k_grid_n; ++i)
        for (int j = 0; j < k_grid_n; ++j) {
            Vec2 k = (static_cast<double>(i) / k_grid_n) * lat.k1 +
                     (static_cast<double>(j) / k_grid_n) * lat.k2;
            if (dual_lattice_distance(k, hs.K, lat) < delta) continue;
            if (exclude_k_prime && dual_lattice_distance(k, hs.K_prime, lat) < delta) continue;
            auto sys = solve_bands(V, k, basis.dim, basis);
            double gap = (sys.energies.array() - E_D).abs().minCoeff();
            if (gap < rep.worst_gap) {
                rep.worst_gap = gap;
                rep.worst_k = k;
            }
        }
    rep.holds = rep.worst_gap >= delta0;
    return rep;
}

inline std::vector<double> fold_quasi_energies(const std::vector<double>& energies, double T_per) {
    if (T_per <= 0.0) throw PreconditionError("fold_quasi_energies: T_per must be positive");
    const double span = 2.0 * M_PI / T_per;
    std::vector<double> out;
    out.reserve(energies.size());
    for (double e : energies) {
        double y = std::fmod(e, span);
        if (y < 0.0) y += span;
        if (y >= span) y -= span;
        out.push_back(y);
    }
    return out;
}

} // namespace floq
