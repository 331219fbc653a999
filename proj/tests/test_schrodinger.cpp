#include <catch2/catch_amalgamated.hpp>

#include <floq/schrodinger.hpp>

#include <random>

using namespace floq;

namespace {

struct Setup {
    Lattice2D lat = make_honeycomb_lattice();
    FourierPotential V = make_canonical_honeycomb(10.0);
    PlaneWaveBasis basis;
    DiracPointData d;
    Setup(int n_c) : basis(PlaneWaveBasis::make(lat, n_c)), d(find_dirac_point(V, basis, lat)) {}
};

std::shared_ptr<const SupercellGrid> grid(int N, int M) {
    return std::make_shared<SupercellGrid>(make_honeycomb_lattice(), N, M);
}

} // namespace

TEST_CASE("gaussian envelope: support, quantization, norm") {
    Lattice2D lat = make_honeycomb_lattice();
    // below the first dual-lattice shell only the constant mode survives
    auto env = WavePacketEnvelope::gaussian(5.0, 0.5, 1.0, cplx(0, 1), 0.125, lat);
    REQUIRE(env.modes.size() == 1);
    CHECK(env.modes[0].p == 0);
    CHECK(env.modes[0].q == 0);
    CHECK(env.norm(lat) == Catch::Approx(std::sqrt(2.0 * lat.cell_area)));

    // one shell up: 0 plus the six nearest dual vectors
    auto env2 = WavePacketEnvelope::gaussian(8.0, 1.1 * lat.k1.norm(), 1.0, 0.0, 0.125, lat);
    CHECK(env2.modes.size() == 7);
    CHECK_NOTHROW(env2.check_band_limit(lat));
    env2.d0 = 0.5;
    CHECK_THROWS_AS(env2.check_band_limit(lat), PreconditionError);
}

TEST_CASE("wavepacket synthesis: norm, pointwise values, spectral support") {
    Setup s(4);
    const int N = 8;
    auto g = grid(N, 16);
    auto env = WavePacketEnvelope::gaussian(8.0, 1.1 * s.lat.k1.norm(), 0.8, cplx(0.3, -0.4),
                                            1.0 / N, s.lat);
    WaveField psi = build_wavepacket(env, s.d, s.basis, g);

    // exact norm bookkeeping down to the Bloch-pair orthogonality tolerance
    CHECK(psi.norm_l2 == Catch::Approx(env.norm(s.lat)).epsilon(1e-7));

    // direct evaluation: eps * sum over modes/harmonics at a few grid points
    const double eps = 1.0 / N;
    for (auto [i, j] : {std::pair{0, 0}, {17, 41}, {100, 3}}) {
        Vec2 x = g->point(i, j);
        cplx direct = 0.0;
        for (auto& m : env.modes) {
            Vec2 xi = m.p * s.lat.k1 + m.q * s.lat.k2;
            cplx envv = std::exp(cplx(0.0, eps * xi.dot(x)));
            for (int t = 0; t < s.basis.dim; ++t) {
                cplx per = std::exp(cplx(0.0, s.basis.g[t].dot(x)));
                direct += envv * per * (m.a1 * s.d.phi1[t] + m.a2 * s.d.phi2[t]);
            }
        }
        direct *= eps;
        CHECK(std::abs(psi.values[static_cast<long>(i) * g->n + j] - direct) < 1e-10);
    }

    // no leakage outside the placed frequency residues (FFT roundoff only)
    Eigen::VectorXcd spec = psi.values;
    g->forward(spec);
    double worst = 0.0;
    for (int a = 0; a < g->n; ++a)
        for (int b = 0; b < g->n; ++b) {
            int ra = ((g->freq(a) % N) + N) % N, rb = ((g->freq(b) % N) + N) % N;
            bool allowed = (ra <= 1 || ra == N - 1) && (rb <= 1 || rb == N - 1);
            if (!allowed) worst = std::max(worst, std::abs(spec[static_cast<long>(a) * g->n + b]));
        }
    CHECK(worst < 1e-13);
}

TEST_CASE("wavepacket synthesis refusals") {
    Setup s(4);
    auto env = WavePacketEnvelope::gaussian(5.0, 0.5, 1.0, 0.0, 0.125, s.lat);
    CHECK_THROWS_AS(build_wavepacket(env, s.d, s.basis, grid(4, 16)), PreconditionError); // eps != 1/N
    // plane-wave content past the grid Nyquist
    env.epsilon = 0.25;
    CHECK_THROWS_AS(build_wavepacket(env, s.d, s.basis, grid(4, 8)), PreconditionError);
    // envelope mode indistinguishable mod N (p = +-1 on a 2-cell supercell)
    auto env2 = WavePacketEnvelope::gaussian(8.0, 1.1 * s.lat.k1.norm(), 1.0, 0.0, 0.5, s.lat);
    CHECK_THROWS_AS(build_wavepacket(env2, s.d, s.basis, grid(2, 16)), PreconditionError);
}

TEST_CASE("evolve: free plane wave picks up the exact kinetic and drive phase") {
    auto g = grid(2, 8); // n = 16
    FourierPotential zeroV = make_canonical_honeycomb(0.0);
    const double eps = 0.5;
    Vec2 k0(0.3, -0.2);

    WaveField psi0 = make_field(g, k0);
    int a = g->index_of_freq(3), b = g->index_of_freq(-5);
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(psi0.values.size());
    spec[static_cast<long>(a) * g->n + b] = cplx(0.7, 0.2);
    g->backward(spec);
    psi0.values = spec;
    psi0.refresh_norm();

    auto f = ForcingProfile::circular(0.8, 2.0);
    const double t0 = 0.3, t_final = 1.7;
    EvolveOptions eo;
    eo.t0 = t0;
    WaveField psi1 = evolve(psi0, zeroV, f, eps, t_final, 2e-4, eo);

    // phase = -|k|^2 t + 2 eps int A(eps(t0+s)).k ds, k = k0 + G
    Vec2 kk = k0 + g->wavenumber(a, b);
    double drive = 0.0;
    const int nq = 200000;
    for (int i = 0; i < nq; ++i) {
        double s0 = (i + 0.5) * t_final / nq;
        drive += 2.0 * eps * f.at(eps * (t0 + s0)).dot(kk) * t_final / nq;
    }
    cplx phase = std::exp(cplx(0.0, -kk.squaredNorm() * t_final + drive));
    CHECK((psi1.values - phase * psi0.values).norm() < 1e-6 * psi0.values.norm());
    CHECK(psi1.norm_l2 == Catch::Approx(psi0.norm_l2).epsilon(1e-12));
}

TEST_CASE("evolve: stationary Bloch mode only rotates its phase") {
    Lattice2D lat = make_honeycomb_lattice();
    FourierPotential V = make_canonical_honeycomb(10.0);
    auto basis = PlaneWaveBasis::make(lat, 4.0);
    auto g = grid(4, 12); // n = 48
    const int N = 4;

    Vec2 k = (1.0 / N) * lat.k1;
    auto sys = solve_bands(V, k, 1, basis);
    const int band = 0;

    WaveField psi0 = make_field(g, Vec2::Zero());
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(psi0.values.size());
    for (int i = 0; i < basis.dim; ++i) {
        auto [m, n] = basis.index_list[i];
        spec[static_cast<long>(g->index_of_freq(m * N + 1)) * g->n + g->index_of_freq(n * N)] =
            sys.vectors(i, band);
    }
    g->backward(spec);
    psi0.values = spec;
    psi0.refresh_norm();

    const double t_final = 0.4;
    auto f = ForcingProfile::none(1.0);
    EvolveOptions eo;
    eo.halving_tol = 1e-5;
    WaveField psi1 = evolve(psi0, V, f, 1.0 / N, t_final, 2e-4, eo);

    cplx phase = std::exp(cplx(0.0, -sys.energies[band] * t_final));
    CHECK((psi1.values - phase * psi0.values).norm() < 1e-4 * psi0.values.norm());
    CHECK(psi1.norm_l2 == Catch::Approx(psi0.norm_l2).epsilon(1e-12));
}

TEST_CASE("dirac_envelope_evolve matches the per-mode propagator") {
    Lattice2D lat = make_honeycomb_lattice();
    auto f = ForcingProfile::circular(0.7, 2.0);
    auto env = WavePacketEnvelope::gaussian(8.0, 1.1 * lat.k1.norm(), cplx(0.5, 0.1),
                                            cplx(-0.2, 0.3), 0.125, lat);
    const double v_D = 4.1, T = 1.3;
    auto out = dirac_envelope_evolve(env, f, v_D, T, lat);
    REQUIRE(out.modes.size() == env.modes.size());
    for (std::size_t i = 0; i < env.modes.size(); ++i) {
        auto& m0 = env.modes[i];
        auto& m1 = out.modes[i];
        Vec2 xi = m0.p * lat.k1 + m0.q * lat.k2;
        Eigen::Vector2cd a = propagate(xi, f, v_D, T) * Eigen::Vector2cd(m0.a1, m0.a2);
        CHECK(std::abs(m1.a1 - a[0]) < 1e-9);
        CHECK(std::abs(m1.a2 - a[1]) < 1e-9);
    }
    // unforced single mode: exact 2x2 exponential
    WavePacketEnvelope one;
    one.d0 = 8.0;
    one.epsilon = 0.125;
    one.modes.push_back({1, 0, 1.0, 0.0});
    auto none = ForcingProfile::none(2.0);
    auto evo = dirac_envelope_evolve(one, none, v_D, 2.0, lat);
    Mat2 H = dirac_hat(lat.k1, 0.0, none, v_D);
    Eigen::Vector2cd ref = detail::exp_minus_i(2.0 * H) * Eigen::Vector2cd(1.0, 0.0);
    CHECK(std::abs(evo.modes[0].a1 - ref[0]) < 1e-9);
    CHECK(std::abs(evo.modes[0].a2 - ref[1]) < 1e-9);
}

TEST_CASE("validate_effective_dynamics: zero error at t=0, bounded drift after a period") {
    Setup s(4);
    const int N = 4;
    auto g = grid(N, 16);
    auto f = ForcingProfile::circular(0.5, 2.0);
    auto env = WavePacketEnvelope::gaussian(5.0, 0.5, 1.0, 0.0, 1.0 / N, s.lat);
    auto rows = validate_effective_dynamics(s.V, s.d, s.basis, f, 1.0 / N, env, 1, g, 1e-3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].t == 0.0);
    CHECK(rows[0].error < 1e-10);
    CHECK(rows[1].t == Catch::Approx(f.T_per() * N));
    CHECK(rows[1].norm == Catch::Approx(env.norm(s.lat)).epsilon(1e-9));
    CHECK(rows[1].error > 1e-6);            // the effective model is not exact
    CHECK(rows[1].error < 0.5 * rows[1].norm); // but it tracks the flow at eps = 1/4
}

TEST_CASE("bloch monodromy: autonomous case is the exact exponential") {
    Lattice2D lat = make_honeycomb_lattice();
    FourierPotential V = make_canonical_honeycomb(10.0);
    auto basis = PlaneWaveBasis::make(lat, 2.0);
    Vec2 k = high_symmetry_points(lat).K;

    auto f = ForcingProfile::none(M_PI);
    const double eps = 0.25;
    Eigen::MatrixXcd M = schrodinger_monodromy_bloch(V, f, eps, k, basis);

    Eigen::MatrixXcd H0 = assemble_hk(V, k, basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H0);
    Eigen::VectorXcd ph(basis.dim);
    for (int i = 0; i < basis.dim; ++i)
        ph[i] = std::exp(cplx(0.0, -(M_PI / eps) * es.eigenvalues()[i]));
    Eigen::MatrixXcd ref = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    CHECK((M - ref).norm() < 1e-9);
}

TEST_CASE("bloch monodromy: step-halving guard refuses a coarse grid") {
    Lattice2D lat = make_honeycomb_lattice();
    FourierPotential V = make_canonical_honeycomb(10.0);
    auto basis = PlaneWaveBasis::make(lat, 2.0);
    auto f = ForcingProfile::circular(0.5, 2.0);
    BlochMonodromyOptions opt;
    opt.dt = 1.0;
    CHECK_THROWS_AS(
        schrodinger_monodromy_bloch(V, f, 0.25, high_symmetry_points(lat).K, basis, opt),
        NumericalError);
}

TEST_CASE("bloch monodromy agrees with the grid propagator on a full period") {
    Lattice2D lat = make_honeycomb_lattice();
    FourierPotential V = make_canonical_honeycomb(10.0);
    auto basis = PlaneWaveBasis::make(lat, 3.0);
    Vec2 K = high_symmetry_points(lat).K;
    auto f = ForcingProfile::circular(0.5, 2.0);
    const int N = 2;
    const double eps = 0.5;

    // initial state: ground Bloch vector at K (well inside both truncations)
    auto sys = solve_bands(V, K, 1, basis);
    Eigen::VectorXcd c0 = sys.vectors.col(0);

    BlochMonodromyOptions opt;
    opt.dt = 5e-4;
    Eigen::MatrixXcd M = schrodinger_monodromy_bloch(V, f, eps, K, basis, opt);
    Eigen::VectorXcd c1 = M * c0;

    auto g = grid(N, 16); // n = 32
    WaveField psi0 = make_field(g, K);
    Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(psi0.values.size());
    for (int i = 0; i < basis.dim; ++i) {
        auto [m, n] = basis.index_list[i];
        spec[static_cast<long>(g->index_of_freq(m * N)) * g->n + g->index_of_freq(n * N)] = c0[i];
    }
    g->backward(spec);
    psi0.values = spec;
    psi0.refresh_norm();

    WaveField psi1 = evolve(psi0, V, f, eps, f.T_per() / eps, 2e-4);
    Eigen::VectorXcd spec1 = psi1.values;
    g->forward(spec1);
    Eigen::VectorXcd c1_grid(basis.dim);
    for (int i = 0; i < basis.dim; ++i) {
        auto [m, n] = basis.index_list[i];
        c1_grid[i] = spec1[static_cast<long>(g->index_of_freq(m * N)) * g->n + g->index_of_freq(n * N)];
    }
    // the two truncations differ only through the high-harmonic tail
    CHECK((c1 - c1_grid).norm() < 1e-3);
}

TEST_CASE("evolve conserves the norm over many steps") {
    Setup s(4);
    const int N = 4;
    auto g = grid(N, 16); // n = 64
    auto env = WavePacketEnvelope::gaussian(5.0, 0.5, cplx(0.6, 0.2), cplx(-0.1, 0.7),
                                            1.0 / N, s.lat);
    WaveField psi = build_wavepacket(env, s.d, s.basis, g);
    double n0 = psi.norm_l2;
    auto f = ForcingProfile::circular(1.0, 2.0);
    psi = evolve(psi, s.V, f, 1.0 / N, 10.0, 1e-3);
    CHECK(psi.norm_l2 == Catch::Approx(n0).epsilon(1e-11));
}
