#include <catch2/catch_amalgamated.hpp>

#include <floq/lattice.hpp>

#include <random>

using namespace floq;

TEST_CASE("honeycomb lattice basis vectors") {
    auto lat = make_honeycomb_lattice();
    const double s3 = std::sqrt(3.0);
    CHECK(lat.v1.x() == Catch::Approx(s3 / 2.0).epsilon(1e-14));
    CHECK(lat.v1.y() == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(lat.v2.x() == Catch::Approx(s3 / 2.0).epsilon(1e-14));
    CHECK(lat.v2.y() == Catch::Approx(-0.5).epsilon(1e-14));
    CHECK(lat.cell_area == Catch::Approx(s3 / 2.0).epsilon(1e-14));
}

TEST_CASE("duality k_m . v_n = 2 pi delta_mn") {
    auto lat = make_honeycomb_lattice();
    const double tp = 2.0 * M_PI;
    CHECK(std::abs(lat.k1.dot(lat.v1) - tp) <= 1e-12);
    CHECK(std::abs(lat.k2.dot(lat.v2) - tp) <= 1e-12);
    CHECK(std::abs(lat.k1.dot(lat.v2)) <= 1e-12);
    CHECK(std::abs(lat.k2.dot(lat.v1)) <= 1e-12);
}

TEST_CASE("high symmetry points") {
    auto lat = make_honeycomb_lattice();
    auto hs = high_symmetry_points(lat);
    CHECK(std::abs(hs.K.x() - 0.0) <= 1e-13);
    CHECK(std::abs(hs.K.y() - 4.0 * M_PI / 3.0) <= 1e-12);
    CHECK((hs.K_prime + hs.K).norm() == 0.0);
}

TEST_CASE("rotation basics") {
    Vec2 r = rotate_R(Vec2(1.0, 0.0));
    CHECK(std::abs(r.x() + 0.5) <= 1e-14);
    CHECK(std::abs(r.y() + std::sqrt(3.0) / 2.0) <= 1e-14);
    CHECK(rotate_R(Vec2(0.0, 0.0)).norm() == 0.0);
}

TEST_CASE("rotation closure R^3 = id on random vectors") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        Vec2 p(u(rng), u(rng));
        Vec2 q = rotate_R(rotate_R(rotate_R(p)));
        CHECK((q - p).norm() <= 1e-12 * (1.0 + p.norm()));
    }
}

TEST_CASE("rotate_R maps K to K modulo dual lattice") {
    auto lat = make_honeycomb_lattice();
    auto hs = high_symmetry_points(lat);
    Vec2 diff = rotate_R(hs.K) - hs.K;
    // independent oracle: brute-force search over integer shifts
    double best = 1e300;
    for (int m = -4; m <= 4; ++m)
        for (int n = -4; n <= 4; ++n)
            best = std::min(best, (diff - m * lat.k1 - n * lat.k2).norm());
    CHECK(best <= 1e-12);
}

TEST_CASE("reduce_to_cell basics") {
    auto lat = make_honeycomb_lattice();
    CHECK(reduce_to_cell(lat.k1, lat).norm() <= 1e-10);
    CHECK(reduce_to_cell(Vec2(0.0, 0.0), lat).norm() == 0.0);

    auto hs = high_symmetry_points(lat);
    Vec2 shifted = hs.K + 7.0 * lat.k1 - 3.0 * lat.k2;
    Vec2 red = reduce_to_cell(shifted, lat);
    // oracle: brute-force integer shift search for the in-cell representative
    Vec2 expect;
    bool found = false;
    for (int m = -10; m <= 10 && !found; ++m)
        for (int n = -10; n <= 10 && !found; ++n) {
            Vec2 c = shifted + m * lat.k1 + n * lat.k2;
            Vec2 st = dual_fractional(c, lat);
            if (st.x() >= -1e-12 && st.x() < 1.0 - 1e-9 && st.y() >= -1e-12 && st.y() < 1.0 - 1e-9) {
                expect = c;
                found = true;
            }
        }
    REQUIRE(found);
    CHECK((red - expect).norm() <= 1e-9);
    // the result equals K modulo the dual lattice (K itself has fractional
    // coordinates (1/3, -1/3), outside the fundamental parallelogram)
    CHECK(dual_lattice_distance(red, hs.K, lat) <= 1e-9);
}

TEST_CASE("reduce_to_cell invariant under integer dual shifts") {
    auto lat = make_honeycomb_lattice();
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    std::uniform_int_distribution<int> zi(-6, 6);
    for (int i = 0; i < 200; ++i) {
        Vec2 k(u(rng), u(rng));
        Vec2 ks = k + zi(rng) * lat.k1 + zi(rng) * lat.k2;
        CHECK((reduce_to_cell(k, lat) - reduce_to_cell(ks, lat)).norm() <= 1e-9);
        // idempotence
        Vec2 r = reduce_to_cell(k, lat);
        CHECK((reduce_to_cell(r, lat) - r).norm() <= 1e-10);
    }
}

TEST_CASE("dual_lattice_distance") {
    auto lat = make_honeycomb_lattice();
    auto hs = high_symmetry_points(lat);
    CHECK(dual_lattice_distance(hs.K + 3.0 * lat.k1, hs.K, lat) <= 1e-10);
    Vec2 off(0.1, -0.05);
    CHECK(dual_lattice_distance(hs.K + off - 2.0 * lat.k2, hs.K, lat) ==
          Catch::Approx(off.norm()).epsilon(1e-10));
}
