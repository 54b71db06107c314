#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpo/core/csv.hpp"
#include "kpo/core/error.hpp"
#include "kpo/maps/chaos_map.hpp"
#include "kpo/maps/disintegration.hpp"
#include "kpo/version.hpp"

// Map and scan files are a CSV body plus a JSON sidecar at <path>.json.
//
// CSV:   line 1  "# kpo <schema> v<version>"
//        line 2  "# subcommand=<name> config_hash=<16 hex digits>"
//        line 3  column header
//        rest    one row per cell (chaos map, K fastest) or per K (scan)
// JSON:  {"schema", "version", "code_version", "subcommand", "config_hash",
//         "created", "config", "settings", "data": {...}}
// "data" holds what the rows do not: axes, C, omega_d/omega0, thresholds, Gamma.

namespace kpo::maps {

inline constexpr int kMapFormatVersion = 1;
inline constexpr const char* kChaosMapSchema = "chaos-map";
inline constexpr const char* kScanSchema = "disintegration";

using json = nlohmann::json;

/// Who produced a file. `config` is the validated configuration; the hash is
/// FNV-1a over its canonical dump unless set explicitly.
struct Provenance {
    std::string subcommand = "library";
    json config = json::object();
    std::string config_hash;
    json settings = json::object();  ///< numerical settings (integrator, truncation, ...)
    std::string created;             ///< filled on save
    std::string code_version = kVersion;

    std::string hash() const { return config_hash.empty() ? csv::hex64(csv::fnv1a(config.dump())) : config_hash; }
};

inline json settings_json(const PipelineOptions& o) {
    return {
        {"C", o.C},
        {"omega_d_over_w0", o.omega_d_over_w0},
        {"kerr_convention", o.convention == model::KerrConvention::exact ? "exact" : "second_order"},
        {"dim_floor", o.dim_floor},
        {"dim_per_gamma", o.dim_per_gamma},
        {"dim_max", o.dim_max},
        {"spacing_min_dim", o.spacing_min_dim},
        {"magnus_steps", o.propagator.steps},
        {"magnus_order", static_cast<int>(o.propagator.order)},
        {"series_tol", o.propagator.series_tol},
        {"unitarity_tol", o.propagator.unitarity_tol},
        {"tail_fraction", o.spectrum.tail_fraction},
        {"tail_weight_max", o.spectrum.tail_weight_max},
        {"level_selection", o.selection == floquet::LevelSelection::all ? "all" : "converged"},
        {"r_poisson", o.references.poisson},
        {"r_coe", o.references.coe},
        {"stats_floor", o.stats_floor},
        {"husimi_nodes", o.husimi_nodes},
        {"entropy_convention", o.entropy == qphase::EntropyConvention::over_pi ? "over_pi" : "standard"},
    };
}

inline json settings_json(const classical::ThresholdOptions& o) {
    return {
        {"probe_count", o.probe_count},
        {"probe_radius_frac", o.probe_radius_frac},
        {"n_periods", o.lyap.n_periods},
        {"renorm_every", o.lyap.renorm_every},
        {"rel_tol", o.lyap.integrator.rel_tol},
        {"abs_tol", o.lyap.integrator.abs_tol},
        {"absolute_min", o.absolute_min},
    };
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

namespace detail {

inline void write_atomically(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw FormatError("cannot open " + tmp + " for writing");
        out << text;
        if (!out) throw FormatError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FormatError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

inline std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

inline std::string magic_line(const char* schema) {
    return std::string("# kpo ") + schema + " v" + std::to_string(kMapFormatVersion);
}

/// Checks line 1; a matching schema with another version is a VersionError.
inline void check_magic(const std::string& line, const char* schema, const std::string& path) {
    const std::string prefix = std::string("# kpo ") + schema + " v";
    if (line.rfind(prefix, 0) != 0) throw FormatError(path + ": not a kpo " + schema + " file (bad first line)");
    int v = 0;
    try {
        v = csv::parse_int<int>(line.substr(prefix.size()));
    } catch (const FormatError&) {
        throw FormatError(path + ": unreadable format version in '" + line + "'");
    }
    if (v != kMapFormatVersion)
        throw VersionError(path + ": format version " + std::to_string(v) + " is not supported (this build reads v" +
                           std::to_string(kMapFormatVersion) + "; no migration is defined)");
}

inline json provenance_json(const Provenance& p, const char* schema, json data) {
    return {
        {"schema", schema},
        {"version", kMapFormatVersion},
        {"code_version", p.code_version},
        {"subcommand", p.subcommand},
        {"config_hash", p.hash()},
        {"created", p.created.empty() ? utc_timestamp() : p.created},
        {"config", p.config},
        {"settings", p.settings},
        {"data", std::move(data)},
    };
}

inline json load_sidecar(const std::string& path, const char* schema, Provenance& prov) {
    const std::string side = sidecar_path(path);
    json j;
    try {
        j = json::parse(read_all(side));
    } catch (const json::exception& e) {
        throw FormatError(side + ": invalid JSON (" + e.what() + ")");
    }
    try {
        if (!j.is_object()) throw FormatError(side + ": provenance must be a JSON object");
        for (const char* key : {"schema", "version", "code_version", "subcommand", "config_hash", "created", "config",
                                "settings", "data"})
            if (!j.contains(key)) throw FormatError(side + ": provenance lacks '" + key + "'");
        if (j.at("schema").get<std::string>() != schema)
            throw FormatError(side + ": schema '" + j.at("schema").get<std::string>() + "', expected '" + schema + "'");
        const int v = j.at("version").get<int>();
        if (v != kMapFormatVersion)
            throw VersionError(side + ": provenance version " + std::to_string(v) + " is not supported");
        prov.code_version = j.at("code_version").get<std::string>();
        prov.subcommand = j.at("subcommand").get<std::string>();
        prov.config_hash = j.at("config_hash").get<std::string>();
        prov.created = j.at("created").get<std::string>();
        prov.config = j.at("config");
        prov.settings = j.at("settings");
        return j.at("data");
    } catch (const json::exception& e) {
        throw FormatError(side + ": malformed provenance (" + e.what() + ")");
    }
}

inline void check_second_line(const std::string& line, const Provenance& prov, const std::string& path) {
    const std::string want = "# subcommand=" + prov.subcommand + " config_hash=" + prov.config_hash;
    if (line != want) throw FormatError(path + ": line 2 does not match the provenance sidecar");
}

}  // namespace detail

inline const char* kMapColumns =
    "k_index,gamma_index,K_over_w0,Gamma,gamma_K,N,levels,r_tilde,r_bar,valid,flags,n_min,cat_quality,"
    "lambda_median,lambda_cutoff,lyapunov_chaotic,seed,message";

inline void save_chaos_map(const ChaosMapGrid& g, const std::string& path, const Provenance& prov) {
    std::ostringstream os;
    os << detail::magic_line(kChaosMapSchema) << '\n'
       << "# subcommand=" << prov.subcommand << " config_hash=" << prov.hash() << '\n'
       << kMapColumns << '\n';
    using csv::format_double;
    for (int j = 0; j < g.nG(); ++j)
        for (int i = 0; i < g.nK(); ++i) {
            const MapCell& c = g.cell(i, j);
            os << i << ',' << j << ',' << format_double(c.K_over_w0) << ',' << format_double(c.Gamma) << ','
               << format_double(c.gamma_K) << ',' << c.N << ',' << c.levels << ',' << format_double(c.r_tilde) << ','
               << format_double(c.r_bar) << ',' << (c.valid ? 1 : 0) << ',' << c.flags << ','
               << format_double(c.n_min) << ',' << format_double(c.cat_quality) << ','
               << format_double(c.lambda_median) << ',' << format_double(c.lambda_cutoff) << ','
               << c.lyapunov_chaotic << ',' << c.seed << ',' << csv::quote(c.message) << '\n';
        }
    json data = {{"K_values", g.K_values},
                 {"Gamma_values", g.Gamma_values},
                 {"C", g.C},
                 {"omega_d_over_w0", g.omega_d_over_w0},
                 {"threshold_inner", g.thresholds.inner},
                 {"threshold_merge", g.thresholds.merge}};
    detail::write_atomically(path, os.str());
    detail::write_atomically(sidecar_path(path),
                             detail::provenance_json(prov, kChaosMapSchema, std::move(data)).dump(2) + "\n");
}

/// Strict load: any inconsistency between header, rows and sidecar throws
/// FormatError (VersionError for a foreign format version); nothing is
/// returned partially.
inline ChaosMapGrid load_chaos_map(const std::string& path, Provenance* prov_out = nullptr) {
    Provenance prov;
    const json data = detail::load_sidecar(path, kChaosMapSchema, prov);
    const std::vector<std::string> lines = detail::lines_of(detail::read_all(path));
    if (lines.size() < 3) throw FormatError(path + ": truncated header");
    detail::check_magic(lines[0], kChaosMapSchema, path);
    detail::check_second_line(lines[1], prov, path);
    if (lines[2] != kMapColumns) throw FormatError(path + ": unexpected column header");

    ChaosMapGrid g;
    try {
        g.K_values = data.at("K_values").get<std::vector<double>>();
        g.Gamma_values = data.at("Gamma_values").get<std::vector<double>>();
        g.C = data.at("C").get<double>();
        g.omega_d_over_w0 = data.at("omega_d_over_w0").get<double>();
        g.thresholds.inner = data.at("threshold_inner").get<double>();
        g.thresholds.merge = data.at("threshold_merge").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(sidecar_path(path) + ": bad data block (" + e.what() + ")");
    }
    const std::size_t n = g.K_values.size() * g.Gamma_values.size();
    if (n == 0) throw FormatError(path + ": empty axes");
    if (lines.size() - 3 != n)
        throw FormatError(path + ": expected " + std::to_string(n) + " rows, found " + std::to_string(lines.size() - 3));
    g.cells.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::string where = path + ":" + std::to_string(r + 4) + ": ";
        try {
            const auto f = csv::split(lines[r + 3]);
            if (f.size() != 18) throw FormatError("expected 18 fields, found " + std::to_string(f.size()));
            const int i = csv::parse_int<int>(f[0]), j = csv::parse_int<int>(f[1]);
            if (static_cast<std::size_t>(j) * g.K_values.size() + i != r || i >= g.nK() || j >= g.nG())
                throw FormatError("cell index out of order");
            MapCell& c = g.cell(i, j);
            c.K_over_w0 = csv::parse_double(f[2]);
            c.Gamma = csv::parse_double(f[3]);
            if (c.K_over_w0 != g.K_values[i] || c.Gamma != g.Gamma_values[j])
                throw FormatError("cell coordinates disagree with the axes");
            c.gamma_K = csv::parse_double(f[4]);
            c.N = csv::parse_int<int>(f[5]);
            c.levels = csv::parse_int<int>(f[6]);
            c.r_tilde = csv::parse_double(f[7]);
            c.r_bar = csv::parse_double(f[8]);
            const int valid = csv::parse_int<int>(f[9]);
            if (valid != 0 && valid != 1) throw FormatError("valid must be 0 or 1");
            c.valid = valid == 1;
            c.flags = csv::parse_int<unsigned>(f[10]);
            c.n_min = csv::parse_double(f[11]);
            c.cat_quality = csv::parse_double(f[12]);
            c.lambda_median = csv::parse_double(f[13]);
            c.lambda_cutoff = csv::parse_double(f[14]);
            c.lyapunov_chaotic = csv::parse_int<int>(f[15]);
            c.seed = csv::parse_int<std::uint64_t>(f[16]);
            c.message = f[17];
        } catch (const FormatError& e) {
            throw FormatError(where + e.what());
        }
    }
    if (prov_out) *prov_out = std::move(prov);
    return g;
}

inline const char* kScanColumns =
    "K_over_w0,gamma_K,N,converged,n_min,S_min,quality,wide_grid,disintegrated,regime,failed,message";

inline Regime parse_regime(const std::string& s) {
    if (s == "regular") return Regime::regular;
    if (s == "mixed") return Regime::mixed;
    if (s == "chaotic") return Regime::chaotic;
    throw FormatError("unknown regime '" + s + "'");
}

inline void save_scan(const DisintegrationScan& s, const std::string& path, const Provenance& prov) {
    std::ostringstream os;
    os << detail::magic_line(kScanSchema) << '\n'
       << "# subcommand=" << prov.subcommand << " config_hash=" << prov.hash() << '\n'
       << kScanColumns << '\n';
    using csv::format_double;
    for (const DisintegrationRow& r : s.rows)
        os << format_double(r.K_over_w0) << ',' << format_double(r.gamma_K) << ',' << r.N << ','
           << (r.converged ? 1 : 0) << ',' << format_double(r.n_min) << ',' << format_double(r.S_min) << ','
           << format_double(r.quality) << ',' << (r.wide_grid ? 1 : 0) << ',' << (r.disintegrated ? 1 : 0) << ','
           << regime_name(r.regime) << ',' << (r.failed ? 1 : 0) << ',' << csv::quote(r.message) << '\n';
    json data = {{"Gamma", s.Gamma},
                 {"C", s.C},
                 {"omega_d_over_w0", s.omega_d_over_w0},
                 {"threshold_inner", s.thresholds.inner},
                 {"threshold_merge", s.thresholds.merge},
                 {"rows", s.rows.size()}};
    detail::write_atomically(path, os.str());
    detail::write_atomically(sidecar_path(path),
                             detail::provenance_json(prov, kScanSchema, std::move(data)).dump(2) + "\n");
}

inline DisintegrationScan load_scan(const std::string& path, Provenance* prov_out = nullptr) {
    Provenance prov;
    const json data = detail::load_sidecar(path, kScanSchema, prov);
    const std::vector<std::string> lines = detail::lines_of(detail::read_all(path));
    if (lines.size() < 3) throw FormatError(path + ": truncated header");
    detail::check_magic(lines[0], kScanSchema, path);
    detail::check_second_line(lines[1], prov, path);
    if (lines[2] != kScanColumns) throw FormatError(path + ": unexpected column header");
    DisintegrationScan s;
    std::size_t rows = 0;
    try {
        s.Gamma = data.at("Gamma").get<double>();
        s.C = data.at("C").get<double>();
        s.omega_d_over_w0 = data.at("omega_d_over_w0").get<double>();
        s.thresholds.inner = data.at("threshold_inner").get<double>();
        s.thresholds.merge = data.at("threshold_merge").get<double>();
        rows = data.at("rows").get<std::size_t>();
    } catch (const json::exception& e) {
        throw FormatError(sidecar_path(path) + ": bad data block (" + e.what() + ")");
    }
    if (lines.size() - 3 != rows)
        throw FormatError(path + ": expected " + std::to_string(rows) + " rows, found " +
                          std::to_string(lines.size() - 3));
    for (std::size_t k = 0; k < rows; ++k) {
        const std::string where = path + ":" + std::to_string(k + 4) + ": ";
        try {
            const auto f = csv::split(lines[k + 3]);
            if (f.size() != 12) throw FormatError("expected 12 fields, found " + std::to_string(f.size()));
            DisintegrationRow r;
            auto flag = [](const std::string& v) {
                if (v != "0" && v != "1") throw FormatError("flag must be 0 or 1, got '" + v + "'");
                return v == "1";
            };
            r.K_over_w0 = csv::parse_double(f[0]);
            r.gamma_K = csv::parse_double(f[1]);
            r.N = csv::parse_int<int>(f[2]);
            r.converged = flag(f[3]);
            r.n_min = csv::parse_double(f[4]);
            r.S_min = csv::parse_double(f[5]);
            r.quality = csv::parse_double(f[6]);
            r.wide_grid = flag(f[7]);
            r.disintegrated = flag(f[8]);
            r.regime = parse_regime(f[9]);
            r.failed = flag(f[10]);
            r.message = f[11];
            s.rows.push_back(std::move(r));
        } catch (const FormatError& e) {
            throw FormatError(where + e.what());
        }
    }
    if (prov_out) *prov_out = std::move(prov);
    return s;
}

}  // namespace kpo::maps
