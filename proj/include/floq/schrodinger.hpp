#pragma once
#include "bloch.hpp"
#include "dirac.hpp"
#include "supercell.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace floq {

struct EnvelopeMode {
    int p, q;    // envelope wavevector xi = p k1 + q k2
    cplx a1, a2; // component amplitudes
};

// Band-limited two-component envelope in the slow variable X = eps*x.
// With eps = 1/N the envelope is periodic over one lattice cell, so its
// Fourier support lies on the dual lattice: alpha_j(X) = sum a_j e^{i xi.X}.
struct WavePacketEnvelope {
    std::vector<EnvelopeMode> modes;
    double d0 = 0.0;
    double epsilon = 0.0;

    void check_band_limit(const Lattice2D& lat) const {
        for (auto& m : modes)
            if ((m.p * lat.k1 + m.q * lat.k2).norm() > d0 * (1.0 + 1e-12))
                throw PreconditionError("envelope: Fourier mode outside the band limit d0");
    }

    double norm(const Lattice2D& lat) const {
        double s = 0.0;
        for (auto& m : modes) s += std::norm(m.a1) + std::norm(m.a2);
        return std::sqrt(lat.cell_area * s);
    }

    static WavePacketEnvelope gaussian(double sigma, double d0, cplx amp1, cplx amp2,
                                       double epsilon, const Lattice2D& lat) {
        WavePacketEnvelope env;
        env.d0 = d0;
        env.epsilon = epsilon;
        int span = static_cast<int>(d0 / lat.k1.norm()) + 1;
        for (int p = -span; p <= span; ++p)
            for (int q = -span; q <= span; ++q) {
                Vec2 xi = p * lat.k1 + q * lat.k2;
                if (xi.norm() > d0) continue;
                double w = std::exp(-xi.squaredNorm() / (2.0 * sigma * sigma));
                env.modes.push_back({p, q, w * amp1, w * amp2});
            }
        return env;
    }
};

// psi(x) = eps * sum_j alpha_j(eps x) Phi_j(x), stored as the periodic part
// with quasi-momentum offset k0 = k_D.
inline WaveField build_wavepacket(const WavePacketEnvelope& env, const DiracPointData& d,
                                  const PlaneWaveBasis& basis,
                                  std::shared_ptr<const SupercellGrid> grid) {
    const auto& g = *grid;
    if (std::abs(env.epsilon * g.N - 1.0) > 1e-12)
        throw PreconditionError("build_wavepacket: epsilon must equal 1/N for this supercell");
    env.check_band_limit(g.lat);

    WaveField f = make_field(std::move(grid), d.k_D);
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(f.values.size());
    for (auto& mode : env.modes) {
        if (std::abs(mode.p) > g.N / 2 - 1 || std::abs(mode.q) > g.N / 2 - 1)
            throw PreconditionError("build_wavepacket: envelope mode indistinguishable on this supercell");
        for (int i = 0; i < basis.dim; ++i) {
            auto [m, n] = basis.index_list[i];
            int fa = m * g.N + mode.p, fb = n * g.N + mode.q;
            if (std::abs(fa) > g.n / 2 - 1 || std::abs(fb) > g.n / 2 - 1)
                throw PreconditionError("build_wavepacket: plane-wave content beyond grid Nyquist");
            cplx c = mode.a1 * d.phi1[i] + mode.a2 * d.phi2[i];
            spec[static_cast<long>(g.index_of_freq(fa)) * g.n + g.index_of_freq(fb)] += c;
        }
    }
    g.backward(spec);
    f.values = env.epsilon * spec;
    f.refresh_norm();
    return f;
}

struct EvolveOptions {
    double t0 = 0.0;          // physical start time (phase of the drive)
    double halving_tol = -1.0; // if > 0, verify the step size by a dt/2 comparison
};

// Strang-split propagation of i dpsi/dt = (|-i grad + k0|^2 + V - 2 eps A(eps t).(-i grad + k0)) psi.
// Kinetic + drive are diagonal in Fourier space; V is diagonal in real space.
inline WaveField evolve(const WaveField& psi0, const FourierPotential& V, const ForcingProfile& f,
                        double epsilon, double t_final, double dt, const EvolveOptions& opts = {}) {
    if (!(dt > 0.0)) throw PreconditionError("evolve: dt must be positive");
    const auto& g = *psi0.grid;
    const long n = g.n, size = n * n;

    const int steps = std::max(1, static_cast<int>(std::llround(t_final / dt)));
    const double h = t_final / steps;

    // constant per-run tables
    Eigen::VectorXd ksq(size);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) {
            Vec2 kk = psi0.k0 + g.wavenumber(static_cast<int>(a), static_cast<int>(b));
            ksq[a * n + b] = kk.squaredNorm();
        }
    Eigen::VectorXd Vgrid = potential_on_grid(V, g);

    auto run = [&](double hh, int nsteps, Eigen::VectorXcd spec) {
        Eigen::VectorXcd kh(size), ev(size);
        for (long i = 0; i < size; ++i) kh[i] = std::exp(cplx(0.0, -0.5 * hh * ksq[i]));
        for (long i = 0; i < size; ++i) ev[i] = std::exp(cplx(0.0, -hh * Vgrid[i]));
        Eigen::VectorXcd ua(n), wb(n);
        for (int s = 0; s < nsteps; ++s) {
            double t_mid = opts.t0 + (s + 0.5) * hh;
            Vec2 A = f.at(epsilon * t_mid);
            // exp(+i hh eps A.(k0+G)) is separable in the two frequency axes
            cplx u1 = std::exp(cplx(0.0, hh * epsilon * A.dot(g.lat.k1) / g.N));
            cplx u2 = std::exp(cplx(0.0, hh * epsilon * A.dot(g.lat.k2) / g.N));
            cplx c0 = std::exp(cplx(0.0, hh * epsilon * A.dot(psi0.k0)));
            for (long a = 0; a < n; ++a) {
                ua[a] = std::pow(u1, g.freq(static_cast<int>(a)));
                wb[a] = std::pow(u2, g.freq(static_cast<int>(a)));
            }
            auto half = [&]() {
                for (long a = 0; a < n; ++a) {
                    cplx fa = c0 * ua[a];
                    for (long b = 0; b < n; ++b) spec[a * n + b] *= kh[a * n + b] * fa * wb[b];
                }
            };
            half();
            g.backward(spec);
            spec.array() *= ev.array();
            g.forward(spec);
            half();
        }
        return spec;
    };

    Eigen::VectorXcd spec0 = psi0.values;
    g.forward(spec0);
    Eigen::VectorXcd spec = run(h, steps, spec0);

    if (opts.halving_tol > 0.0) {
        Eigen::VectorXcd spec2 = run(0.5 * h, 2 * steps, spec0);
        double err = (spec2 - spec).norm() / std::max(1e-300, spec0.norm());
        if (err > opts.halving_tol)
            throw NumericalError("evolve: step-halving disagreement " + std::to_string(err) +
                                 ", use dt <= " + std::to_string(0.5 * h));
        spec = spec2;
    }

    WaveField out = psi0;
    g.backward(spec);
    out.values = spec;
    out.refresh_norm();
    return out;
}

// Fourier-space solution of the effective Dirac envelope equation: each mode
// evolves by the 2x2 per-momentum propagator.
inline WavePacketEnvelope dirac_envelope_evolve(const WavePacketEnvelope& alpha0,
                                                const ForcingProfile& f, double v_D,
                                                double T_final, const Lattice2D& lat,
                                                const PropagateOptions& opts = {}) {
    alpha0.check_band_limit(lat);
    WavePacketEnvelope out = alpha0;
    for (auto& m : out.modes) {
        Vec2 xi = m.p * lat.k1 + m.q * lat.k2;
        Mat2 U = propagate(xi, f, v_D, T_final, 64, opts);
        Eigen::Vector2cd a = U * Eigen::Vector2cd(m.a1, m.a2);
        m.a1 = a[0];
        m.a2 = a[1];
    }
    return out;
}

struct ValidationRow {
    double t;
    double error;
    double norm;
};

// e(t) = || U^eps[psi_wp](t) - eps alpha(eps t, eps x)^T Phi(x) e^{-i E_D t} ||
// sampled at multiples of the physical forcing period T_per/eps.
inline std::vector<ValidationRow> validate_effective_dynamics(
    const FourierPotential& V, const DiracPointData& d, const PlaneWaveBasis& basis,
    const ForcingProfile& f, double epsilon, const WavePacketEnvelope& alpha0,
    int horizon_periods, std::shared_ptr<const SupercellGrid> grid, double dt) {
    const double period_phys = f.T_per() / epsilon;
    WaveField psi = build_wavepacket(alpha0, d, basis, grid);

    // The effective Hamiltonian couples momentum and forcing as (xi - A) when
    // derived from the 2i eps A.grad drive used by `evolve`; the (xi + A)
    // convention of dirac_hat corresponds to the reversed forcing.
    ForcingProfile f_eff = f.negated();

    std::vector<ValidationRow> rows;
    auto record = [&](double t) {
        auto alpha_t = dirac_envelope_evolve(alpha0, f_eff, d.v_D, epsilon * t, grid->lat);
        WaveField ref = build_wavepacket(alpha_t, d, basis, grid);
        ref.values *= std::exp(cplx(0.0, -d.E_D * t));
        WaveField diff = psi;
        diff.values -= ref.values;
        diff.refresh_norm();
        rows.push_back({t, diff.norm_l2, psi.norm_l2});
    };
    record(0.0);
    for (int p = 1; p <= horizon_periods; ++p) {
        EvolveOptions eo;
        eo.t0 = (p - 1) * period_phys;
        psi = evolve(psi, V, f, epsilon, period_phys, dt, eo);
        record(p * period_phys);
    }
    return rows;
}

struct BlochMonodromyOptions {
    double dt = 2.5e-3;
    double halving_tol = 1e-5; // on a probe column over the full horizon
};

// Full monodromy over one physical forcing period T_per/eps in the truncated
// Bloch fiber at k: H_k(t) = H0(k) + D(t), D diagonal with entries
// -2 eps A(eps t).(k+g).  Strang splitting with the exact exp(-i h H0).
inline Eigen::MatrixXcd schrodinger_monodromy_bloch(const FourierPotential& V,
                                                    const ForcingProfile& f, double epsilon,
                                                    const Vec2& k, const PlaneWaveBasis& basis,
                                                    const BlochMonodromyOptions& opts = {}) {
    const double t_total = f.T_per() / epsilon;
    const int steps = std::max(1, static_cast<int>(std::llround(t_total / opts.dt)));
    const double h = t_total / steps;
    const int B = basis.dim;

    Eigen::MatrixXcd H0 = assemble_hk(V, k, basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H0);
    if (es.info() != Eigen::Success)
        throw NumericalError("schrodinger_monodromy_bloch: eigensolver failed");
    const Eigen::MatrixXcd& U0 = es.eigenvectors();
    const Eigen::VectorXd& E = es.eigenvalues();

    Eigen::VectorXd gx(B), gy(B);
    for (int i = 0; i < B; ++i) {
        gx[i] = (k + basis.g[i]).x();
        gy[i] = (k + basis.g[i]).y();
    }

    auto make_half = [&](double hh) -> Eigen::MatrixXcd {
        Eigen::VectorXcd ph(B);
        for (int i = 0; i < B; ++i) ph[i] = std::exp(cplx(0.0, -0.5 * hh * E[i]));
        return U0 * ph.asDiagonal() * U0.adjoint();
    };

    auto drive_phase = [&](double hh, double t_mid, Eigen::VectorXcd& ph) {
        Vec2 A = f.at(epsilon * t_mid);
        for (int i = 0; i < B; ++i) {
            double di = -2.0 * epsilon * (A.x() * gx[i] + A.y() * gy[i]);
            ph[i] = std::exp(cplx(0.0, -hh * di));
        }
    };

    // cheap probe run at a given resolution (matrix-vector only)
    auto probe = [&](double hh, int nsteps, const Eigen::MatrixXcd& Eh) {
        std::mt19937 rng(12345);
        std::normal_distribution<double> nd;
        Eigen::VectorXcd v(B);
        for (int i = 0; i < B; ++i) v[i] = cplx(nd(rng), nd(rng));
        v.normalize();
        Eigen::VectorXcd ph(B);
        for (int s = 0; s < nsteps; ++s) {
            drive_phase(hh, (s + 0.5) * hh, ph);
            v = Eh * (ph.asDiagonal() * (Eh * v).eval());
        }
        return v;
    };

    Eigen::MatrixXcd Eh = make_half(h);
    if (opts.halving_tol > 0.0) {
        Eigen::VectorXcd v1 = probe(h, steps, Eh);
        Eigen::VectorXcd v2 = probe(0.5 * h, 2 * steps, make_half(0.5 * h));
        double err = (v1 - v2).norm();
        if (err > opts.halving_tol)
            throw NumericalError("schrodinger_monodromy_bloch: step-halving disagreement " +
                                 std::to_string(err) + ", use dt <= " + std::to_string(0.5 * h));
    }

    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(B, B);
    Eigen::VectorXcd ph(B);
    for (int s = 0; s < steps; ++s) {
        drive_phase(h, (s + 0.5) * h, ph);
        M = Eh * (ph.asDiagonal() * (Eh * M).eval());
    }
    if ((M.adjoint() * M - Eigen::MatrixXcd::Identity(B, B)).norm() > 1e-8)
        throw NumericalError("schrodinger_monodromy_bloch: unitarity violated");
    return M;
}

} // namespace floq
