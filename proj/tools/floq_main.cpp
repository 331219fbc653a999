// Command-line front end: configuration, orchestration, and tabular output
// for the lattice / effective-Dirac / supercell analyses.
#include <CLI11.hpp>

#include <floq/bloch.hpp>
#include <floq/config.hpp>
#include <floq/dirac.hpp>
#include <floq/io.hpp>
#include <floq/projection.hpp>
#include <floq/schrodinger.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

using namespace floq;
namespace fs = std::filesystem;

namespace {

struct CliState {
    std::string config_path;
    std::vector<std::string> overrides;
    bool dry_run = false;
    int workers = 0;
    Vec2 xi = Vec2::Zero(); // monodromy verb
};

RunConfig resolve_config(const CliState& st) {
    json j = st.config_path.empty() ? config_to_json(RunConfig{})
                                    : config_to_json(load_config(st.config_path));
    for (auto& o : st.overrides) apply_override(j, o);
    RunConfig c = config_from_json(j);
    validate_config(c);
    return c;
}

int resolve_workers(const CliState& st) {
    if (st.workers > 0) return st.workers;
    if (const char* env = std::getenv("FLOQ_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void emit_summary(const json& j) { std::cout << j.dump() << "\n"; }

bool wants(const RunConfig& c, const std::string& fmt) {
    return std::find(c.formats.begin(), c.formats.end(), fmt) != c.formats.end();
}

std::string subsection_hash(const RunConfig& c, const std::vector<std::string>& sections) {
    json full = config_to_json(c), sub;
    for (auto& s : sections) sub[s] = full[s];
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016zx", std::hash<std::string>{}(sub.dump()));
    return buf;
}

// cached Dirac-point scalars, auto-computed on a cache miss
json ensure_dirac(const RunConfig& c) {
    fs::path path = fs::path(c.out_dir) / "cache" /
                    ("dirac-" + subsection_hash(c, {"potential", "basis"}) + ".json");
    if (fs::exists(path)) {
        std::ifstream in(path);
        return json::parse(in);
    }
    Lattice2D lat = make_honeycomb_lattice();
    auto basis = PlaneWaveBasis::make(lat, c.N_c);
    auto d = find_dirac_point(make_potential(c), basis, lat);
    json j = {{"k_D", {d.k_D.x(), d.k_D.y()}},
              {"band_pair", {d.band_pair.first, d.band_pair.second}},
              {"E_D", d.E_D},
              {"v_D", d.v_D},
              {"degeneracy_residual", d.degeneracy_residual}};
    atomic_write(path, j.dump(2) + "\n");
    return j;
}

json ensure_gap(const RunConfig& c) {
    fs::path path =
        fs::path(c.out_dir) / "cache" /
        ("gap-" + subsection_hash(c, {"potential", "basis", "forcing", "dirac"}) + ".json");
    if (fs::exists(path)) {
        std::ifstream in(path);
        return json::parse(in);
    }
    json dir = ensure_dirac(c);
    auto f = make_forcing(c);
    auto scan = gap_over_disk(f, dir["v_D"], c.d0, c.n_radial, c.n_angular);
    json j = {{"g_tilde", scan.g_tilde},
              {"argmin_xi", {scan.argmin_xi.x(), scan.argmin_xi.y()}},
              {"d0", c.d0},
              {"samples", scan.samples.size()}};
    atomic_write(path, j.dump(2) + "\n");
    return j;
}

int run_bands(const RunConfig& c) {
    Lattice2D lat = make_honeycomb_lattice();
    auto basis = PlaneWaveBasis::make(lat, c.N_c);
    auto hs = high_symmetry_points(lat);
    std::vector<Vec2> path = {Vec2::Zero(), hs.K, hs.K_prime, Vec2::Zero()};
    int n_bands = std::min(8, basis.dim);
    auto rows = band_path(make_potential(c), path, std::max(2, c.n_radial), n_bands, basis);

    std::vector<std::string> header = {"arclength", "kx", "ky"};
    for (int b = 1; b <= n_bands; ++b) header.push_back("E" + std::to_string(b));
    CsvWriter csv(header);
    for (auto& r : rows) {
        std::vector<double> v = {r.arclength, r.k.x(), r.k.y()};
        for (int b = 0; b < n_bands; ++b) v.push_back(r.energies[b]);
        csv.row(v);
    }
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "bands.csv", csv.str());
    emit_summary({{"verb", "bands"}, {"rows", rows.size()}, {"n_bands", n_bands}});
    return 0;
}

int run_dirac(const RunConfig& c) {
    json d = ensure_dirac(c);
    if (wants(c, "json")) atomic_write(fs::path(c.out_dir) / "dirac.json", d.dump(2) + "\n");
    json s = d;
    s["verb"] = "dirac";
    emit_summary(s);
    return 0;
}

int run_monodromy(const RunConfig& c, const Vec2& xi) {
    json dir = ensure_dirac(c);
    auto f = make_forcing(c);
    auto M = monodromy(xi, f, dir["v_D"]);
    auto s = floquet_exponent(M, f.T_per());

    json mj = {{"xi", {xi.x(), xi.y()}},
               {"matrix",
                {{M.m(0, 0).real(), M.m(0, 0).imag()},
                 {M.m(0, 1).real(), M.m(0, 1).imag()},
                 {M.m(1, 0).real(), M.m(1, 0).imag()},
                 {M.m(1, 1).real(), M.m(1, 1).imag()}}},
               {"mu", s.mu}};
    if (wants(c, "json")) atomic_write(fs::path(c.out_dir) / "monodromy.json", mj.dump(2) + "\n");
    CsvWriter csv({"re", "im", "mu"});
    csv.row({s.multipliers.first.real(), s.multipliers.first.imag(), s.mu});
    csv.row({s.multipliers.second.real(), s.multipliers.second.imag(), -s.mu});
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "multipliers.csv", csv.str());

    double unit = (M.m.adjoint() * M.m - Mat2::Identity()).norm();
    emit_summary({{"verb", "monodromy"}, {"mu", s.mu}, {"unitarity_residual", unit}});
    return 0;
}

int run_gap(const RunConfig& c) {
    json dir = ensure_dirac(c);
    auto f = make_forcing(c);
    auto scan = gap_over_disk(f, dir["v_D"], c.d0, c.n_radial, c.n_angular);

    CsvWriter csv({"xi1", "xi2", "mu", "gap"});
    for (auto& s : scan.samples)
        csv.row({s.xi.x(), s.xi.y(), s.mu, multiplier_gap(s, f.T_per())});
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "gap.csv", csv.str());
    json gj = ensure_gap(c);
    if (wants(c, "json")) atomic_write(fs::path(c.out_dir) / "gap.json", gj.dump(2) + "\n");

    emit_summary({{"verb", "gap"},
                  {"g_tilde", scan.g_tilde},
                  {"argmin_xi", {scan.argmin_xi.x(), scan.argmin_xi.y()}},
                  {"samples", scan.samples.size()}});
    return 0;
}

int run_wkb(const RunConfig& c) {
    auto f = make_forcing(c);
    std::vector<double> xis = {10, 20, 40, 80, 160}, res;
    CsvWriter csv({"xi", "residual"});
    for (double xi : xis) {
        res.push_back(wkb_residual(xi, f));
        csv.row({xi, res.back()});
    }
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "wkb.csv", csv.str());
    double slope = detail::loglog_slope(xis, res);
    emit_summary({{"verb", "wkb"}, {"slope", slope}, {"points", xis.size()}});
    return 0;
}

int run_coverage(const RunConfig& c) {
    json dir = ensure_dirac(c);
    auto f = make_forcing(c);
    double v_D = dir["v_D"];
    CsvWriter csv({"d0", "fraction"});
    double d99 = -1.0, frac = 0.0;
    for (double d0 = 0.5; d0 <= 32.0; d0 *= 2.0) {
        frac = circle_coverage(f, v_D, d0, recommended_coverage_grid(f, v_D, d0));
        csv.row({d0, frac});
        if (frac >= 0.99) {
            d99 = d0;
            break;
        }
    }
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "coverage.csv", csv.str());
    emit_summary(
        {{"verb", "coverage"}, {"reached", d99 > 0.0}, {"d0_99", d99}, {"fraction", frac}});
    return 0;
}

int run_evolve(const RunConfig& c) {
    Lattice2D lat = make_honeycomb_lattice();
    auto basis = PlaneWaveBasis::make(lat, c.N_c);
    auto d = find_dirac_point(make_potential(c), basis, lat);
    auto f = make_forcing(c);
    auto grid = std::make_shared<SupercellGrid>(lat, c.N, c.M);
    double eps = 1.0 / c.N;
    auto env = WavePacketEnvelope::gaussian(c.envelope_sigma, c.d0, 1.0, 0.0, eps, lat);
    WaveField psi = build_wavepacket(env, d, basis, grid);

    double period = f.T_per() / eps;
    CsvWriter csv({"t", "norm"});
    csv.row({0.0, psi.norm_l2});
    for (int p = 1; p <= c.horizon_periods; ++p) {
        EvolveOptions eo;
        eo.t0 = (p - 1) * period;
        psi = evolve(psi, make_potential(c), f, eps, period, c.dt, eo);
        csv.row({p * period, psi.norm_l2});
    }
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "evolve.csv", csv.str());
    double drift = std::abs(psi.norm_l2 - env.norm(lat));
    emit_summary({{"verb", "evolve"},
                  {"periods", c.horizon_periods},
                  {"final_norm", psi.norm_l2},
                  {"norm_drift", drift}});
    return 0;
}

int run_validate(const RunConfig& c) {
    Lattice2D lat = make_honeycomb_lattice();
    auto basis = PlaneWaveBasis::make(lat, c.N_c);
    auto d = find_dirac_point(make_potential(c), basis, lat);
    auto f = make_forcing(c);
    auto grid = std::make_shared<SupercellGrid>(lat, c.N, c.M);
    double eps = 1.0 / c.N;
    auto env = WavePacketEnvelope::gaussian(c.envelope_sigma, c.d0, 1.0, 0.0, eps, lat);

    auto rows = validate_effective_dynamics(make_potential(c), d, basis, f, eps, env,
                                            c.horizon_periods, grid, c.dt);
    CsvWriter csv({"t", "error", "norm"});
    for (auto& r : rows) csv.row({r.t, r.error, r.norm});
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "validate.csv", csv.str());
    emit_summary({{"verb", "validate"},
                  {"eps", eps},
                  {"final_error", rows.back().error},
                  {"norm", rows.back().norm}});
    return 0;
}

int run_fold(const RunConfig& c) {
    Lattice2D lat = make_honeycomb_lattice();
    auto basis = PlaneWaveBasis::make(lat, c.N_c);
    auto f = make_forcing(c);
    double eps = 1.0 / c.N;
    double T_phys = f.T_per() / eps;
    auto sys = solve_bands(make_potential(c), high_symmetry_points(lat).K,
                           std::min(20, basis.dim), basis);
    std::vector<double> energies(sys.energies.data(), sys.energies.data() + sys.energies.size());
    auto folded = fold_quasi_energies(energies, T_phys);
    CsvWriter csv({"band", "E", "folded"});
    for (long b = 0; b < sys.energies.size(); ++b)
        csv.row({static_cast<double>(b + 1), sys.energies[b], folded[b]});
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "fold.csv", csv.str());
    emit_summary({{"verb", "fold"}, {"bands", sys.energies.size()}, {"T_phys", T_phys}});
    return 0;
}

int run_average(const RunConfig& c) {
    Lattice2D lat = make_honeycomb_lattice();
    FourierPotential V = make_potential(c);
    auto basis = PlaneWaveBasis::make(lat, std::min(c.N_c, 2));
    auto g = SupercellGrid(lat, std::max(4, c.N), c.M);
    double eps = 1.0 / g.N;

    BandLimitedScalar q;
    q.d = 2.0 * lat.k1.norm();
    std::mt19937 rng(42);
    std::normal_distribution<double> nd;
    for (int p = -2; p <= 2; ++p)
        for (int s = -2; s <= 2; ++s)
            if ((p * lat.k1 + s * lat.k2).norm() <= q.d)
                q.modes.push_back({p, s, {nd(rng), nd(rng)}});

    auto sys = solve_bands(V, high_symmetry_points(lat).K, 3, basis);
    auto rep_const = poisson_average(PeriodicFunction::constant(1.0), q, eps, g);
    auto rep_diag = poisson_average(
        PeriodicFunction::bloch_pair_product(sys.vectors.col(0), sys.vectors.col(0), basis), q,
        eps, g);
    auto rep_off = poisson_average(
        PeriodicFunction::bloch_pair_product(sys.vectors.col(0), sys.vectors.col(2), basis), q,
        eps, g);

    json j = {{"constant", {{"lhs", {rep_const.lhs_re, rep_const.lhs_im}}, {"residual", rep_const.residual}}},
              {"pair_diag", {{"lhs", {rep_diag.lhs_re, rep_diag.lhs_im}}, {"residual", rep_diag.residual}}},
              {"pair_off", {{"lhs_abs", std::abs(rep_off.lhs())}, {"rhs_abs", std::abs(rep_off.rhs())}}}};
    if (wants(c, "json")) atomic_write(fs::path(c.out_dir) / "average.json", j.dump(2) + "\n");
    double worst = std::max(rep_const.residual, rep_diag.residual);
    emit_summary({{"verb", "average"}, {"max_residual", worst}, {"off_diagonal_lhs", std::abs(rep_off.lhs())}});
    return 0;
}

int run_effgap(const RunConfig& c, int /*workers*/) {
    json dir = ensure_dirac(c); // dependency, cached by content hash
    json gap = ensure_gap(c);

    Lattice2D lat = make_honeycomb_lattice();
    auto basis = PlaneWaveBasis::make(lat, c.N_c);
    auto d = find_dirac_point(make_potential(c), basis, lat);
    auto f = make_forcing(c);
    double eps = 1.0 / c.N;
    double T_phys = f.T_per() / eps;

    double nu_D = std::fmod(static_cast<double>(dir["E_D"]) * T_phys, 2.0 * M_PI);
    if (nu_D < 0.0) nu_D += 2.0 * M_PI;
    double half = c.window_g * static_cast<double>(gap["g_tilde"]) * f.T_per();
    QuasiEnergyWindow win;
    win.lo = std::fmod(nu_D - half + 4.0 * M_PI, 2.0 * M_PI);
    win.hi = std::fmod(nu_D + half, 2.0 * M_PI);

    BlochMonodromyOptions mopts;
    mopts.dt = c.dt;
    auto report = effective_gap_scan(make_potential(c), d, f, eps, c.d0, win, {d.k_D}, basis,
                                     c.M, mopts);

    CsvWriter csv({"nu", "in_window", "contrast", "bl_fraction", "residual_fraction"});
    json per_k = json::array();
    for (auto& row : report.per_k) {
        json modes = json::array();
        for (auto& m : row.modes) {
            csv.row({m.nu, m.in_window ? 1.0 : 0.0, m.contrast ? 1.0 : 0.0, m.bl_fraction,
                     m.residual_fraction});
            modes.push_back({{"nu", m.nu},
                             {"in_window", m.in_window},
                             {"bl_fraction", m.bl_fraction},
                             {"residual_fraction", m.residual_fraction}});
        }
        per_k.push_back({{"k", {row.k.x(), row.k.y()}},
                         {"empty_selection", row.empty_selection},
                         {"modes", modes}});
    }
    if (wants(c, "csv")) atomic_write(fs::path(c.out_dir) / "effgap.csv", csv.str());
    json j = {{"window", {win.lo, win.hi}},
              {"nu_D", nu_D},
              {"g_tilde", gap["g_tilde"]},
              {"per_k", per_k},
              {"in_window", {{"count", report.in_window_count},
                             {"min", report.in_window_min},
                             {"median", report.in_window_median}}},
              {"contrast", {{"count", report.contrast_count},
                            {"min", report.contrast_min},
                            {"median", report.contrast_median}}}};
    if (wants(c, "json")) atomic_write(fs::path(c.out_dir) / "effgap.json", j.dump(2) + "\n");
    emit_summary({{"verb", "effgap"},
                  {"in_window_count", report.in_window_count},
                  {"in_window_min", report.in_window_min},
                  {"contrast_count", report.contrast_count},
                  {"contrast_median", report.contrast_median}});
    return 0;
}

int run_selftest(const RunConfig&) {
    int passed = 0, failed = 0;
    auto check = [&](bool ok) { (ok ? passed : failed)++; };

    Lattice2D lat = make_honeycomb_lattice();
    // dual basis pairing
    check(std::abs(lat.k1.dot(lat.v1) - 2.0 * M_PI) < 1e-12);
    check(std::abs(lat.k1.dot(lat.v2)) < 1e-12);
    // the Dirac momentum is rotation-invariant modulo the dual lattice
    auto hs = high_symmetry_points(lat);
    check(dual_lattice_distance(rotate_R(hs.K), hs.K, lat) < 1e-12);
    // canonical coefficients and symmetry flags
    auto V = make_canonical_honeycomb(10.0);
    check(std::abs(V.coeff(1, 0) - 5.0) < 1e-15);
    check(check_symmetries(V, lat).all());
    check(std::abs(evaluate(V, Vec2::Zero(), lat) - 30.0) < 1e-12);
    // trivial effective-Dirac facts
    auto f0 = ForcingProfile::none(1.0);
    check((monodromy(Vec2::Zero(), f0, 1.0).m - Mat2::Identity()).norm() < 1e-12);
    auto fc = ForcingProfile::circular(1.0, 2.0);
    auto s = floquet_exponent(monodromy(Vec2::Zero(), fc, 1.0), fc.T_per());
    double mu0 = exponent_at_zero_analytic(1.0, 2.0, 1.0);
    double arc = std::abs(std::remainder(mu0 * fc.T_per() - s.mu * fc.T_per(), 2.0 * M_PI));
    check(std::min(arc, std::abs(std::remainder(mu0 * fc.T_per() + s.mu * fc.T_per(),
                                                2.0 * M_PI))) < 1e-10);
    // folding is idempotent on already-folded values
    check(fold_quasi_energies({0.0}, 1.0)[0] == 0.0);

    emit_summary({{"verb", "selftest"}, {"passed", passed}, {"failed", failed}});
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"floq: honeycomb band structure, driven Dirac monodromy, and "
                 "supercell Floquet analysis"};
    app.require_subcommand(1);

    CliState st;
    app.add_option("-c,--config", st.config_path, "configuration file (JSON)");
    app.add_option("--set", st.overrides, "override: section.key=value (repeatable)");
    app.add_flag("--dry-run", st.dry_run, "validate config and print the plan only");
    app.add_option("--workers", st.workers, "worker pool size")->envname("FLOQ_WORKERS");

    const std::vector<std::string> verbs = {"bands",    "dirac", "monodromy", "gap",
                                            "wkb",      "coverage", "evolve", "validate",
                                            "fold",     "effgap", "average", "selftest"};
    for (auto& v : verbs) app.add_subcommand(v)->fallthrough();
    app.get_subcommand("monodromy")
        ->add_option("--xi", [&st](CLI::results_t r) {
            st.xi = Vec2(std::stod(r.at(0)), std::stod(r.at(1)));
            return true;
        }, "envelope momentum (two reals)")
        ->expected(2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 64;
    }
    std::string verb = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg = resolve_config(st);
        int workers = resolve_workers(st);
        if (st.dry_run) {
            emit_summary({{"verb", verb},
                          {"dry_run", true},
                          {"workers", workers},
                          {"config", config_to_json(cfg)}});
            return 0;
        }
        if (verb == "bands") return run_bands(cfg);
        if (verb == "dirac") return run_dirac(cfg);
        if (verb == "monodromy") return run_monodromy(cfg, st.xi);
        if (verb == "gap") return run_gap(cfg);
        if (verb == "wkb") return run_wkb(cfg);
        if (verb == "coverage") return run_coverage(cfg);
        if (verb == "evolve") return run_evolve(cfg);
        if (verb == "validate") return run_validate(cfg);
        if (verb == "fold") return run_fold(cfg);
        if (verb == "effgap") return run_effgap(cfg, workers);
        if (verb == "average") return run_average(cfg);
        if (verb == "selftest") return run_selftest(cfg);
        std::cerr << "unknown verb: " << verb << "\n" << app.help();
        return 64;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 65;
    } catch (const PreconditionError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
