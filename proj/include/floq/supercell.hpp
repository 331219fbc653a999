#pragma once
#include "errors.hpp"
#include "potential.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <cmath>
#include <memory>

namespace floq {

// Periodic N x N supercell of the lattice cell, M grid points per cell per
// dimension.  Grid points x_ij = (i/M) v1 + (j/M) v2; discrete wavenumbers
// G_ab = (fa/N) k1 + (fb/N) k2 with signed frequencies fa, fb.
class SupercellGrid {
  public:
    SupercellGrid(const Lattice2D& lattice, int n_cells, int pts_per_cell)
        : lat(lattice), N(n_cells), M(pts_per_cell), n(n_cells * pts_per_cell) {
        if (n_cells < 1 || pts_per_cell < 2)
            throw PreconditionError("SupercellGrid: need n_cells >= 1, pts_per_cell >= 2");
    }

    Lattice2D lat;
    int N, M, n;

    Vec2 point(int i, int j) const {
        return (static_cast<double>(i) / M) * lat.v1 + (static_cast<double>(j) / M) * lat.v2;
    }

    // signed frequency of DFT index a in [0, n)
    int freq(int a) const { return a < (n + 1) / 2 ? a : a - n; }

    // DFT index of a signed frequency
    int index_of_freq(int f) const {
        if (f < -n / 2 || f >= (n + 1) / 2)
            throw PreconditionError("SupercellGrid: frequency outside Nyquist range");
        return f >= 0 ? f : f + n;
    }

    Vec2 wavenumber(int a, int b) const {
        return (static_cast<double>(freq(a)) / N) * lat.k1 +
               (static_cast<double>(freq(b)) / N) * lat.k2;
    }

    double cell_area() const { return lat.cell_area; }
    double supercell_area() const { return static_cast<double>(N) * N * lat.cell_area; }

    // analysis: values -> coefficients of e^{+i G.x} (normalized)
    void forward(Eigen::VectorXcd& v) const {
        run_fft(v, FFTW_FORWARD);
        v /= static_cast<double>(n) * n;
    }

    // synthesis: coefficients -> values
    void backward(Eigen::VectorXcd& v) const { run_fft(v, FFTW_BACKWARD); }

  private:
    void run_fft(Eigen::VectorXcd& v, int sign) const {
        if (v.size() != static_cast<long>(n) * n)
            throw PreconditionError("SupercellGrid: array size mismatch");
        auto* p = reinterpret_cast<fftw_complex*>(v.data());
        fftw_plan plan = fftw_plan_dft_2d(n, n, p, p, sign, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
};

// Complex field on a supercell grid.  The physical field is
// values(x) * exp(i k0.x): k0 carries a quasi-momentum offset that need not
// be a supercell harmonic.  Norms use the physical-area convention
// ||f||^2 = supercell_area * mean |f|^2, under which a unit l2 coefficient
// vector gives a unit field.
struct WaveField {
    std::shared_ptr<const SupercellGrid> grid;
    Eigen::VectorXcd values; // row-major, index i*n + j
    Vec2 k0 = Vec2::Zero();
    double norm_l2 = 0.0;

    double compute_norm() const {
        const double n2 = static_cast<double>(grid->n) * grid->n;
        return std::sqrt(grid->supercell_area() / n2 * values.squaredNorm());
    }
    void refresh_norm() { norm_l2 = compute_norm(); }
};

inline cplx inner(const WaveField& f, const WaveField& g) {
    if (f.grid->n != g.grid->n || (f.k0 - g.k0).norm() > 1e-12)
        throw PreconditionError("inner: incompatible fields");
    const double n2 = static_cast<double>(f.grid->n) * f.grid->n;
    return f.grid->supercell_area() / n2 * f.values.dot(g.values);
}

inline WaveField make_field(std::shared_ptr<const SupercellGrid> grid, const Vec2& k0 = Vec2::Zero()) {
    WaveField f;
    f.grid = std::move(grid);
    f.values = Eigen::VectorXcd::Zero(static_cast<long>(f.grid->n) * f.grid->n);
    f.k0 = k0;
    return f;
}

// real-space samples of a lattice-periodic Fourier potential on the grid
inline Eigen::VectorXd potential_on_grid(const FourierPotential& V, const SupercellGrid& g) {
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(static_cast<long>(g.n) * g.n);
    for (auto& [idx, c] : V.coeffs) {
        auto [m, n] = idx;
        if (std::abs(m) * g.N > g.n / 2 - 1 || std::abs(n) * g.N > g.n / 2 - 1)
            throw PreconditionError("potential_on_grid: harmonic beyond grid Nyquist");
        int a = g.index_of_freq(m * g.N), b = g.index_of_freq(n * g.N);
        spec[static_cast<long>(a) * g.n + b] += c;
    }
    g.backward(spec);
    return spec.real();
}

} // namespace floq
