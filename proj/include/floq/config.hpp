#pragma once
#include "forcing.hpp"
#include "potential.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace floq {

// configuration problems map to exit code 65 at the CLI boundary
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // potential
    std::string potential_name = "canonical";
    double V0 = 10.0;
    std::vector<std::array<double, 4>> potential_coeffs; // m, n, re, im (explicit override)
    // basis
    int N_c = 8;
    // forcing
    std::string forcing_kind = "circular"; // circular | tabulated | none
    double R = 1.0, omega = 2.0;
    double T_per = 0.0; // 0 = derive from omega (circular); required otherwise
    std::vector<std::array<double, 2>> forcing_samples;
    // dirac
    double d0 = 0.5;
    int n_radial = 24, n_angular = 12;
    // supercell
    int N = 8, M = 16;
    double dt = 1e-3;
    int horizon_periods = 1;
    double envelope_sigma = 8.0;
    // scan
    double window_g = 0.5; // window half-width as a fraction of the effective gap
    std::vector<double> eps_list = {0.125, 0.0625, 0.03125};
    // output
    std::string out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

using json = nlohmann::json;

inline json config_to_json(const RunConfig& c) {
    json j;
    j["potential"] = {{"name", c.potential_name}, {"V0", c.V0}};
    if (!c.potential_coeffs.empty()) j["potential"]["coefficients"] = c.potential_coeffs;
    j["basis"] = {{"N_c", c.N_c}};
    j["forcing"] = {{"kind", c.forcing_kind}, {"R", c.R}, {"omega", c.omega}, {"T_per", c.T_per}};
    if (!c.forcing_samples.empty()) j["forcing"]["samples"] = c.forcing_samples;
    j["dirac"] = {{"d0", c.d0}, {"n_radial", c.n_radial}, {"n_angular", c.n_angular}};
    j["supercell"] = {{"N", c.N},
                      {"M", c.M},
                      {"dt", c.dt},
                      {"horizon_periods", c.horizon_periods},
                      {"envelope_sigma", c.envelope_sigma}};
    j["scan"] = {{"window_g", c.window_g}, {"eps_list", c.eps_list}};
    j["output"] = {{"directory", c.out_dir}, {"formats", c.formats}};
    return j;
}

namespace detail {

template <class T>
void pick(const json& sec, const std::string& section, const std::string& key, T& slot) {
    if (!sec.contains(key)) return;
    try {
        slot = sec.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config field " + section + "." + key + ": " + e.what());
    }
}

} // namespace detail

inline RunConfig config_from_json(const json& j) {
    RunConfig c;
    static const std::vector<std::string> sections = {"potential", "basis",     "forcing", "dirac",
                                                      "supercell", "scan",      "output"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(sections.begin(), sections.end(), it.key()) == sections.end())
            throw ConfigError("unknown config section '" + it.key() + "'");

    if (j.contains("potential")) {
        auto& s = j.at("potential");
        detail::pick(s, "potential", "name", c.potential_name);
        detail::pick(s, "potential", "V0", c.V0);
        detail::pick(s, "potential", "coefficients", c.potential_coeffs);
    }
    if (j.contains("basis")) detail::pick(j.at("basis"), "basis", "N_c", c.N_c);
    if (j.contains("forcing")) {
        auto& s = j.at("forcing");
        detail::pick(s, "forcing", "kind", c.forcing_kind);
        detail::pick(s, "forcing", "R", c.R);
        detail::pick(s, "forcing", "omega", c.omega);
        detail::pick(s, "forcing", "T_per", c.T_per);
        detail::pick(s, "forcing", "samples", c.forcing_samples);
    }
    if (j.contains("dirac")) {
        auto& s = j.at("dirac");
        detail::pick(s, "dirac", "d0", c.d0);
        detail::pick(s, "dirac", "n_radial", c.n_radial);
        detail::pick(s, "dirac", "n_angular", c.n_angular);
    }
    if (j.contains("supercell")) {
        auto& s = j.at("supercell");
        detail::pick(s, "supercell", "N", c.N);
        detail::pick(s, "supercell", "M", c.M);
        detail::pick(s, "supercell", "dt", c.dt);
        detail::pick(s, "supercell", "horizon_periods", c.horizon_periods);
        detail::pick(s, "supercell", "envelope_sigma", c.envelope_sigma);
    }
    if (j.contains("scan")) {
        auto& s = j.at("scan");
        detail::pick(s, "scan", "window_g", c.window_g);
        detail::pick(s, "scan", "eps_list", c.eps_list);
    }
    if (j.contains("output")) {
        auto& s = j.at("output");
        detail::pick(s, "output", "directory", c.out_dir);
        detail::pick(s, "output", "formats", c.formats);
    }
    return c;
}

inline void validate_config(const RunConfig& c) {
    auto finite = [](double x, const char* name) {
        if (!std::isfinite(x)) throw ConfigError(std::string("non-finite value for ") + name);
    };
    finite(c.V0, "potential.V0");
    finite(c.R, "forcing.R");
    finite(c.omega, "forcing.omega");
    finite(c.T_per, "forcing.T_per");
    finite(c.d0, "dirac.d0");
    finite(c.dt, "supercell.dt");
    finite(c.window_g, "scan.window_g");
    finite(c.envelope_sigma, "supercell.envelope_sigma");
    if (c.N_c < 1) throw ConfigError("basis.N_c must be >= 1");
    if (c.N < 1 || c.M < 2) throw ConfigError("supercell.N >= 1 and supercell.M >= 2 required");
    if (c.dt <= 0.0) throw ConfigError("supercell.dt must be positive");
    if (c.horizon_periods < 1) throw ConfigError("supercell.horizon_periods must be >= 1");
    if (c.forcing_kind != "circular" && c.forcing_kind != "tabulated" && c.forcing_kind != "none")
        throw ConfigError("forcing.kind must be circular, tabulated, or none");
    if (c.forcing_kind == "circular" && c.T_per > 0.0 &&
        std::abs(c.T_per * c.omega - 2.0 * M_PI) > 1e-12)
        throw ConfigError("forcing: T_per * omega must equal 2*pi when both are given");
    if ((c.forcing_kind == "tabulated" || c.forcing_kind == "none") && c.T_per <= 0.0)
        throw ConfigError("forcing: T_per required for kind " + c.forcing_kind);
    if (c.forcing_kind == "tabulated" && c.forcing_samples.empty())
        throw ConfigError("forcing: sample table required for tabulated kind");
    for (double e : c.eps_list)
        finite(e, "scan.eps_list");
    for (std::size_t i = 1; i < c.eps_list.size(); ++i)
        if (!(c.eps_list[i] < c.eps_list[i - 1]))
            throw ConfigError("scan.eps_list must be strictly decreasing");
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    RunConfig c = config_from_json(j);
    return c;
}

// --set section.key=value; the value is parsed as JSON, or taken verbatim as
// a string when that fails
inline void apply_override(json& j, const std::string& spec) {
    auto eq = spec.find('=');
    auto dot = spec.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("bad override '" + spec + "', expected section.key=value");
    std::string section = spec.substr(0, dot);
    std::string key = spec.substr(dot + 1, eq - dot - 1);
    std::string value = spec.substr(eq + 1);
    json v;
    try {
        v = json::parse(value);
    } catch (const json::parse_error&) {
        v = value;
    }
    j[section][key] = v;
}

inline FourierPotential make_potential(const RunConfig& c) {
    if (!c.potential_coeffs.empty()) {
        FourierPotential V;
        V.cutoff = 0;
        for (auto& row : c.potential_coeffs) {
            int m = static_cast<int>(std::lround(row[0])), n = static_cast<int>(std::lround(row[1]));
            V.set(m, n, cplx(row[2], row[3]));
            V.cutoff = std::max({V.cutoff, std::abs(m), std::abs(n)});
        }
        return V;
    }
    if (c.potential_name != "canonical")
        throw ConfigError("unknown potential name '" + c.potential_name + "'");
    return make_canonical_honeycomb(c.V0);
}

inline ForcingProfile make_forcing(const RunConfig& c) {
    if (c.forcing_kind == "circular") {
        if (c.T_per > 0.0) return ForcingProfile::circular_checked(c.R, c.omega, c.T_per);
        return ForcingProfile::circular(c.R, c.omega);
    }
    if (c.forcing_kind == "none") return ForcingProfile::none(c.T_per);
    std::vector<Vec2> samples;
    for (auto& s : c.forcing_samples) samples.emplace_back(s[0], s[1]);
    return ForcingProfile::tabulated(c.T_per, samples);
}

} // namespace floq
