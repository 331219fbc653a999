#pragma once
#include "errors.hpp"
#include "lattice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <utility>

namespace floq {

using cplx = std::complex<double>;

struct SymmetryReport {
    bool real_valued = false;
    bool even = false;
    bool r_invariant = false;
    bool all() const { return real_valued && even && r_invariant; }
};

// Lattice potential as a sparse map of dual-lattice Fourier coefficients:
// V(x) = sum_{(m,n)} c_{mn} exp(i (m k1 + n k2) . x).
struct FourierPotential {
    using Index = std::pair<int, int>;
    std::map<Index, cplx> coeffs;
    int cutoff = 0; // max |index| stored

    cplx coeff(int m, int n) const {
        auto it = coeffs.find({m, n});
        return it == coeffs.end() ? cplx(0.0) : it->second;
    }

    void set(int m, int n, cplx c) {
        coeffs[{m, n}] = c;
        cutoff = std::max({cutoff, std::abs(m), std::abs(n)});
    }
};

inline FourierPotential make_canonical_honeycomb(double V0) {
    if (!std::isfinite(V0)) throw PreconditionError("make_canonical_honeycomb: V0 not finite");
    FourierPotential V;
    if (V0 == 0.0) return V;
    // V0 * [cos(k1.x) + cos(k2.x) + cos((k1+k2).x)]
    const double h = V0 / 2.0;
    for (auto [m, n] : {std::pair{1, 0}, {0, 1}, {1, 1}}) {
        V.set(m, n, h);
        V.set(-m, -n, h);
    }
    return V;
}

// Integer index of a dual vector g = m k1 + n k2; throws if g is not a dual
// lattice vector to within tol.
inline std::pair<int, int> dual_index_of(const Vec2& g, const Lattice2D& lat, double tol = 1e-9) {
    Vec2 st = dual_fractional(g, lat);
    const double m = std::round(st.x());
    const double n = std::round(st.y());
    if (std::abs(st.x() - m) > tol || std::abs(st.y() - n) > tol)
        throw NumericalError("dual_index_of: vector is not on the dual lattice");
    return {static_cast<int>(m), static_cast<int>(n)};
}

inline SymmetryReport check_symmetries(const FourierPotential& V, const Lattice2D& lat) {
    const double tol = 1e-12;
    double scale = 0.0;
    for (auto& [idx, c] : V.coeffs) scale = std::max(scale, std::abs(c));
    const double atol = tol * std::max(1.0, scale);

    SymmetryReport rep{true, true, true};
    for (auto& [idx, c] : V.coeffs) {
        auto [m, n] = idx;
        if (std::abs(std::conj(V.coeff(-m, -n)) - c) > atol) rep.real_valued = false;
        if (std::abs(V.coeff(-m, -n) - c) > atol) rep.even = false;
        auto [mr, nr] = dual_index_of(rotate_R(m * lat.k1 + n * lat.k2), lat);
        if (std::abs(V.coeff(mr, nr) - c) > atol) rep.r_invariant = false;
    }
    return rep;
}

inline double evaluate(const FourierPotential& V, const Vec2& x, const Lattice2D& lat) {
    if (!check_symmetries(V, lat).real_valued)
        throw PreconditionError("evaluate: potential is not real-valued");
    cplx sum = 0.0;
    double scale = 0.0;
    for (auto& [idx, c] : V.coeffs) {
        auto [m, n] = idx;
        sum += c * std::exp(cplx(0.0, (m * lat.k1 + n * lat.k2).dot(x)));
        scale += std::abs(c);
    }
    if (std::abs(sum.imag()) > 1e-10 * std::max(1.0, scale))
        throw NumericalError("evaluate: imaginary residue exceeds tolerance");
    return sum.real();
}

} // namespace floq
