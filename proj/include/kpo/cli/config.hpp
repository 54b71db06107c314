#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "kpo/core/csv.hpp"
#include "kpo/core/error.hpp"

namespace kpo::cli {

enum class KeyType { real, integer, boolean, text, real_list, choice };

struct KeySpec {
    std::string name;  ///< "section.key"
    KeyType type = KeyType::real;
    std::string fallback;  ///< default as text; empty means unset
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    std::vector<std::string> choices;
    bool hashed = true;  ///< part of the config hash (false for run-time knobs)
    std::string doc;
};

inline const std::vector<KeySpec>& schema() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    using T = KeyType;
    static const std::vector<KeySpec> s = {
        // model: target form, or the direct form when g3 is given
        {"model.K_over_w0", T::real, "0.53e-4", 0, inf, {}, true, "target Kerr K/omega0"},
        {"model.Gamma", T::real, "8.5", 0, inf, {}, true, "target well parameter"},
        {"model.C", T::real, "10", -inf, inf, {}, true, "family constant in K^(2) = C g4"},
        {"model.omega_d_over_w0", T::real, "1.999866", 0, inf, {}, true, "drive frequency"},
        {"model.kerr_convention", T::choice, "exact", 0, 0, {"exact", "second_order"}, true, "K used for targets"},
        {"model.omega0", T::real, "", 0, inf, {}, true, "direct form"},
        {"model.g3", T::real, "", -inf, inf, {}, true, "direct form"},
        {"model.g4", T::real, "", -inf, inf, {}, true, "direct form"},
        {"model.omega_d", T::real, "", 0, inf, {}, true, "direct form"},
        {"model.Omega_d", T::real, "", -inf, inf, {}, true, "direct form"},
        {"model.hbar_eff", T::real, "1", 0, inf, {}, true, "effective Planck constant"},

        {"floquet.steps", T::integer, "512", 256, 1 << 20, {}, true, "Magnus steps per period"},
        {"floquet.order", T::integer, "4", 2, 4, {}, true, "Magnus order (2 or 4)"},
        {"floquet.dim", T::integer, "0", 0, 20000, {}, true, "Fock dimension; 0 = Gamma rule"},
        {"floquet.dim_max", T::integer, "1600", 8, 20000, {}, true, "cap for the Gamma rule"},
        {"floquet.spacing_min_dim", T::integer, "800", 8, 20000, {}, true, "minimum N for r statistics"},
        {"floquet.tail_fraction", T::real, "0.1", 0, 1, {}, true, "top Fock fraction for the tail test"},
        {"floquet.tail_weight_max", T::real, "1e-8", 0, 1, {}, true, "converged below this tail weight"},
        {"floquet.level_selection", T::choice, "converged", 0, 0, {"converged", "all"}, true, "levels in r"},
        {"floquet.stats_floor", T::integer, "50", 3, 1e9, {}, true, "minimum levels for a valid r"},
        {"floquet.r_poisson", T::real, "0.39", 0, 1, {}, true, "r~ mapped to r_bar = 0"},
        {"floquet.r_coe", T::real, "0.53", 0, 1, {}, true, "r~ mapped to r_bar = 1"},
        {"floquet.t0_over_Td", T::real, "0.25", -inf, inf, {}, true, "drive phase origin / T_d"},

        {"classical.n_periods", T::integer, "1000", 2, 1e9, {}, true, "Lyapunov horizon in periods"},
        {"classical.rel_tol", T::real, "1e-10", 0, 1, {}, true, "integrator relative tolerance"},
        {"classical.abs_tol", T::real, "1e-12", 0, 1, {}, true, "integrator absolute tolerance"},
        {"classical.probe_count", T::integer, "25", 1, 1e6, {}, true, "orbits in the probe disk"},
        {"classical.probe_radius_frac", T::real, "0.05", 0, 10, {}, true, "probe radius / sqrt(2 Gamma)"},
        {"classical.grid", T::integer, "201", 3, 4001, {}, true, "flood-fill grid nodes per axis"},
        {"classical.bbox_scale", T::real, "1.2", 1, 100, {}, true, "flood-fill box / separatrix box"},
        {"classical.gamma_tol", T::real, "0.25", 0, inf, {}, true, "bisection tolerance in Gamma"},
        {"classical.absolute_min", T::real, "1e-3", 0, inf, {}, true, "lower bound of the chaos cutoff"},
        {"classical.ray_K_over_w0", T::real, "4e-4", 0, inf, {}, true, "K/omega0 of the threshold ray"},
        {"classical.gamma_lo", T::real, "30", 0, inf, {}, true, "ray start"},
        {"classical.gamma_hi", T::real, "100", 0, inf, {}, true, "ray end"},
        {"classical.which", T::choice, "both", 0, 0, {"both", "inner", "merge"}, true, "thresholds to scan"},

        {"map.K_min", T::real, "3.3e-5", 0, inf, {}, true, "K/omega0 axis start"},
        {"map.K_max", T::real, "3.3e-3", 0, inf, {}, true, "K/omega0 axis end"},
        {"map.K_count", T::integer, "24", 1, 10000, {}, true, "K/omega0 nodes (log spaced)"},
        {"map.Gamma_min", T::real, "5", 0, inf, {}, true, "Gamma axis start"},
        {"map.Gamma_max", T::real, "100", 0, inf, {}, true, "Gamma axis end"},
        {"map.Gamma_count", T::integer, "24", 1, 10000, {}, true, "Gamma nodes (linear)"},
        {"map.K_values", T::real_list, "", 0, inf, {}, true, "explicit K axis (overrides the range)"},
        {"map.Gamma_values", T::real_list, "", 0, inf, {}, true, "explicit Gamma axis"},
        {"map.with_cat", T::boolean, "false", 0, 0, {}, true, "n_min per cell"},
        {"map.with_lyapunov", T::boolean, "false", 0, 0, {}, true, "classical vote per cell"},
        {"map.threshold_inner", T::real, "0.0187", 0, inf, {}, true, "inner hyperbola Gamma K"},
        {"map.threshold_merge", T::real, "0.03347", 0, inf, {}, true, "merge hyperbola Gamma K"},

        {"disintegration.Gamma", T::real, "80", 0, inf, {}, true, "fixed Gamma"},
        {"disintegration.K_values", T::real_list, "0.33e-4,1e-4,2e-4,2.91e-4,3.66e-4,5e-4,8.66e-4,12e-4", 0, inf, {},
         true, "K/omega0 list"},
        {"disintegration.quality_floor", T::real, "0.3", 0, 1, {}, true, "cat quality floor"},
        {"disintegration.entropy", T::boolean, "true", 0, 0, {}, true, "compute S_min"},
        {"disintegration.husimi_grids", T::boolean, "false", 0, 0, {}, true, "write F_min Husimi grids"},
        {"disintegration.husimi_nodes", T::integer, "161", 3, 4001, {}, true, "Husimi nodes per axis"},
        {"disintegration.entropy_convention", T::choice, "over_pi", 0, 0, {"over_pi", "standard"}, true, "S prefactor"},

        {"phase.orbits", T::integer, "40", 0, 100000, {}, true, "Poincare orbits"},
        {"phase.section_periods", T::integer, "300", 1, 1e7, {}, true, "periods per Poincare orbit"},
        {"phase.lambda_nodes", T::integer, "41", 0, 2001, {}, true, "lambda field nodes per axis; 0 = skip"},
        {"phase.lambda_periods", T::integer, "500", 2, 1e7, {}, true, "periods per lambda orbit"},
        {"phase.husimi_nodes", T::integer, "121", 0, 4001, {}, true, "Husimi nodes per axis; 0 = skip"},
        {"phase.participation_nodes", T::integer, "61", 0, 2001, {}, true, "participation nodes; 0 = skip"},
        {"phase.window_scale", T::real, "1.5", 0, 100, {}, true, "window / lemniscate box"},

        {"snail.alpha", T::real, "0.29", 0, 1, {}, true, "small-junction ratio"},
        {"snail.m", T::integer, "3", 1, 1000, {}, true, "large junctions"},
        {"snail.phi_ext_over_2pi", T::real, "0.45", -inf, inf, {}, true, "external flux / flux quantum"},
        {"snail.M", T::integer, "1", 1, 100000, {}, true, "SNAILs in the array"},
        {"snail.E_C", T::real, "1", 0, inf, {}, true, "charging energy"},
        {"snail.E_J", T::real, "1000", 0, inf, {}, true, "Josephson energy"},
        {"snail.xi_J", T::real, "inf", 0, inf, {}, true, "L_J / L; inf = no linear inductance"},

        {"validate.tolerance_scale", T::real, "1", 0, inf, {}, true, "multiplies every invariant tolerance"},

        {"run.seed", T::integer, "1", 0, 9e18, {}, true, "seed for stochastic steps"},
        {"run.workers", T::integer, "1", 1, 4096, {}, false, "worker threads"},
        {"run.out", T::text, "", 0, 0, {}, false, "output directory"},
        {"run.verbose", T::boolean, "false", 0, 0, {}, false, "progress on stderr"},
    };
    return s;
}

inline const KeySpec* find_key(const std::string& name) {
    for (const auto& k : schema())
        if (k.name == name) return &k;
    return nullptr;
}

/// Validated key-value configuration. Every problem found while loading
/// (unknown key, bad value, out of range) is collected and reported in one
/// ConfigError.
class Config {
public:
    /// `file` is INI text with [section] blocks; `overrides` are
    /// "section.key=value" strings applied after the file.
    static Config load(const std::optional<std::string>& file, const std::vector<std::string>& overrides) {
        Config c;
        std::vector<std::string> bad_keys, problems;
        auto put = [&](const std::string& name, const std::string& value, const std::string& where) {
            if (!find_key(name)) {
                bad_keys.push_back(name);
                problems.push_back(where + ": unknown key '" + name + "'");
                return;
            }
            c.raw_[name] = trim(value);
        };
        if (file) {
            boost::property_tree::ptree pt;
            try {
                boost::property_tree::ini_parser::read_ini(*file, pt);
            } catch (const boost::property_tree::ini_parser_error& e) {
                throw ConfigError(std::string("cannot read config: ") + e.what(), {});
            }
            for (const auto& [section, body] : pt) {
                if (body.empty()) {
                    if (body.data().empty()) continue;  // empty [section]
                    bad_keys.push_back(section);
                    problems.push_back(*file + ": key '" + section + "' outside a [section]");
                    continue;
                }
                for (const auto& [key, v] : body) put(section + "." + key, v.data(), *file);
            }
        }
        for (const std::string& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) {
                bad_keys.push_back(o);
                problems.push_back("override '" + o + "' is not section.key=value");
                continue;
            }
            put(o.substr(0, eq), o.substr(eq + 1), "--set");
        }
        for (const auto& [name, value] : c.raw_) {
            std::string why = check(*find_key(name), value);
            if (!why.empty()) {
                bad_keys.push_back(name);
                problems.push_back(name + ": " + why);
            }
        }
        if (!problems.empty()) {
            std::ostringstream os;
            os << problems.size() << " configuration problem" << (problems.size() > 1 ? "s" : "") << ": ";
            for (std::size_t k = 0; k < problems.size(); ++k) os << (k ? "; " : "") << problems[k];
            throw ConfigError(os.str(), bad_keys);
        }
        return c;
    }

    void set(const std::string& name, const std::string& value) {
        const KeySpec* k = find_key(name);
        if (!k) throw ConfigError("unknown key '" + name + "'", {name});
        const std::string why = check(*k, value);
        if (!why.empty()) throw ConfigError(name + ": " + why, {name});
        raw_[name] = trim(value);
    }

    bool has(const std::string& name) const { return raw_.count(name) || !spec(name).fallback.empty(); }
    bool explicitly_set(const std::string& name) const { return raw_.count(name) > 0; }

    std::string text(const std::string& name) const {
        auto it = raw_.find(name);
        return it != raw_.end() ? it->second : spec(name).fallback;
    }
    double real(const std::string& name) const { return parse_real(require(name)); }
    long long integer(const std::string& name) const { return static_cast<long long>(parse_real(require(name))); }
    bool boolean(const std::string& name) const { return parse_bool(require(name)).value(); }
    std::vector<double> reals(const std::string& name) const {
        const std::string t = text(name);
        return t.empty() ? std::vector<double>{} : parse_list(t);
    }

    /// Effective values of every hashed key (defaults included), sorted.
    nlohmann::json effective() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& k : schema()) {
            if (!k.hashed) continue;
            const std::string t = text(k.name);
            if (!t.empty()) j[k.name] = t;
        }
        return j;
    }
    std::string hash() const { return csv::hex64(csv::fnv1a(effective().dump())); }

private:
    std::map<std::string, std::string> raw_;

    static const KeySpec& spec(const std::string& name) {
        const KeySpec* k = find_key(name);
        if (!k) throw ConfigError("unknown key '" + name + "'", {name});
        return *k;
    }
    std::string require(const std::string& name) const {
        const std::string t = text(name);
        if (t.empty()) throw ConfigError(name + " is not set", {name});
        return t;
    }

    static std::string trim(std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    static double parse_real(const std::string& raw) {
        const std::string s = trim(raw);
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        double v = 0.0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("'" + raw + "'");
        return v;
    }
    static std::optional<bool> parse_bool(const std::string& raw) {
        const std::string s = trim(raw);
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        return std::nullopt;
    }
    static std::vector<double> parse_list(const std::string& raw) {
        std::vector<double> v;
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ',')) v.push_back(parse_real(item));
        return v;
    }

    /// Empty string when the value is acceptable, otherwise the reason.
    static std::string check(const KeySpec& k, const std::string& value) {
        auto range = [&](double v) -> std::string {
            if (std::isnan(v) || v < k.min || v > k.max) {
                std::ostringstream os;
                os << "value " << v << " outside [" << k.min << ", " << k.max << "]";
                return os.str();
            }
            return {};
        };
        try {
            switch (k.type) {
                case KeyType::real:
                    return range(parse_real(value));
                case KeyType::integer: {
                    const double v = parse_real(value);
                    if (v != std::floor(v)) return "expected an integer, got '" + value + "'";
                    return range(v);
                }
                case KeyType::boolean:
                    return parse_bool(value) ? std::string() : "expected true/false, got '" + value + "'";
                case KeyType::text:
                    return {};
                case KeyType::real_list: {
                    const auto v = parse_list(value);
                    if (v.empty()) return "empty list";
                    for (double x : v) {
                        std::string r = range(x);
                        if (!r.empty()) return r;
                    }
                    return {};
                }
                case KeyType::choice: {
                    const std::string s = trim(value);
                    if (std::find(k.choices.begin(), k.choices.end(), s) != k.choices.end()) return {};
                    std::string all;
                    for (const auto& c : k.choices) all += (all.empty() ? "" : "|") + c;
                    return "expected one of " + all + ", got '" + value + "'";
                }
            }
        } catch (const FormatError&) {
            return "not a number: '" + value + "'";
        }
        return {};
    }
};

}  // namespace kpo::cli
