#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace floq {

using Vec2 = Eigen::Vector2d;

// Equilateral triangular lattice: direct basis v1, v2 and dual basis k1, k2
// with k_m . v_n = 2*pi*delta_mn.
struct Lattice2D {
    Vec2 v1, v2;
    Vec2 k1, k2;
    double cell_area = 0.0;
};

struct HighSymmetryPoints {
    Vec2 K, K_prime;
};

inline Lattice2D make_honeycomb_lattice() {
    const double s3 = std::sqrt(3.0);
    Lattice2D lat;
    lat.v1 = Vec2(s3 / 2.0, 0.5);
    lat.v2 = Vec2(s3 / 2.0, -0.5);
    const double c = 4.0 * M_PI / s3;
    lat.k1 = c * Vec2(0.5, s3 / 2.0);
    lat.k2 = c * Vec2(0.5, -s3 / 2.0);
    lat.cell_area = std::abs(lat.v1.x() * lat.v2.y() - lat.v1.y() * lat.v2.x());
    return lat;
}

inline HighSymmetryPoints high_symmetry_points(const Lattice2D& lat) {
    HighSymmetryPoints p;
    p.K = (lat.k1 - lat.k2) / 3.0;
    p.K_prime = -p.K;
    return p;
}

// Clockwise rotation by 2*pi/3.  Convention fixed here once: this is the R*
// appearing in the symmetry action f(x) -> f(R* x) of honeycomb potentials.
inline Vec2 rotate_R(const Vec2& p) {
    const double c = -0.5;
    const double s = -std::sqrt(3.0) / 2.0;
    return Vec2(c * p.x() - s * p.y(), s * p.x() + c * p.y());
}

// Fractional dual coordinates (s,t) with k = s*k1 + t*k2.
inline Vec2 dual_fractional(const Vec2& k, const Lattice2D& lat) {
    return Vec2(k.dot(lat.v1) / (2.0 * M_PI), k.dot(lat.v2) / (2.0 * M_PI));
}

// Reduce k into the fundamental dual cell {s*k1 + t*k2 : s,t in [0,1)}.
inline Vec2 reduce_to_cell(const Vec2& k, const Lattice2D& lat) {
    Vec2 st = dual_fractional(k, lat);
    double s = st.x() - std::floor(st.x());
    double t = st.y() - std::floor(st.y());
    if (s >= 1.0) s -= 1.0;
    if (t >= 1.0) t -= 1.0;
    return s * lat.k1 + t * lat.k2;
}

// Euclidean distance from k to the translate set {p + m*k1 + n*k2}.
inline double dual_lattice_distance(const Vec2& k, const Vec2& p, const Lattice2D& lat) {
    Vec2 st = dual_fractional(k - p, lat);
    const double s0 = std::round(st.x());
    const double t0 = std::round(st.y());
    double best = std::numeric_limits<double>::infinity();
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
            Vec2 d = (k - p) - (s0 + a) * lat.k1 - (t0 + b) * lat.k2;
            best = std::min(best, d.norm());
        }
    return best;
}

} // namespace floq
