#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpo/classical/lemniscate.hpp"
#include "kpo/classical/lyapunov.hpp"
#include "kpo/classical/poincare.hpp"
#include "kpo/classical/threshold.hpp"
#include "kpo/cli/config.hpp"
#include "kpo/cli/validate.hpp"
#include "kpo/floquet/io.hpp"
#include "kpo/maps/persist.hpp"
#include "kpo/model/snail.hpp"
#include "kpo/qphase/grid_io.hpp"
#include "kpo/qphase/participation.hpp"
#include "kpo/version.hpp"

namespace kpo::cli {

using nlohmann::json;

inline constexpr const char* kOutDirEnv = "KPO_OUT_DIR";

enum ExitCode { exit_ok = 0, exit_invariant_failed = 1, exit_usage = 2, exit_runtime = 3 };

/// One run of one subcommand: validated config plus where output goes.
struct Context {
    std::string subcommand;
    Config cfg;
    std::string out_dir;
    int workers = 1;
    std::uint64_t seed = 1;
    bool verbose = false;
    std::ostream* out = &std::cout;
    std::ostream* err = &std::cerr;
    std::vector<std::string> files;

    std::string hash() const { return cfg.hash(); }
    /// <out>/<subcommand>-<hash>.<suffix>
    std::string path(const std::string& suffix) {
        const std::string p = (std::filesystem::path(out_dir) / (subcommand + "-" + hash() + "." + suffix)).string();
        files.push_back(std::filesystem::path(p).filename().string());
        return p;
    }
    void log(const std::string& msg) const {
        if (verbose) *err << "[" << subcommand << "] " << msg << std::endl;
    }
    maps::Provenance provenance(json settings = json::object()) const {
        maps::Provenance p;
        p.subcommand = subcommand;
        p.config = cfg.effective();
        p.config_hash = hash();
        p.settings = std::move(settings);
        return p;
    }
    /// First line of every CSV the CLI writes besides maps and scans.
    std::string csv_banner() const { return "# subcommand=" + subcommand + " config_hash=" + hash() + "\n"; }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw FormatError("write failed: " + path);
}

inline void write_manifest(Context& ctx, json extra = json::object()) {
    json m = {{"subcommand", ctx.subcommand},
              {"config_hash", ctx.hash()},
              {"code_version", kVersion},
              {"created", maps::utc_timestamp()},
              {"config", ctx.cfg.effective()},
              {"files", ctx.files}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_text((std::filesystem::path(ctx.out_dir) / (ctx.subcommand + "-" + ctx.hash() + ".manifest.json")).string(),
               m.dump(2) + "\n");
}

// ---- config -> library options ------------------------------------------

inline model::KerrConvention kerr_convention(const Config& c) {
    return c.text("model.kerr_convention") == "second_order" ? model::KerrConvention::second_order
                                                             : model::KerrConvention::exact;
}

inline bool direct_model(const Config& c) {
    for (const char* k : {"model.omega0", "model.g3", "model.g4", "model.omega_d", "model.Omega_d"})
        if (c.explicitly_set(k)) return true;
    return false;
}

/// Model parameters in either the direct or the target form; mixing the two
/// is rejected with every conflicting key listed.
inline model::OscillatorParams model_params(const Config& c) {
    if (!direct_model(c))
        return model::params_from_targets(c.real("model.K_over_w0"), c.real("model.Gamma"), c.real("model.C"),
                                          c.real("model.omega_d_over_w0"), kerr_convention(c));
    std::vector<std::string> bad;
    for (const char* k : {"model.K_over_w0", "model.Gamma", "model.C", "model.omega_d_over_w0"})
        if (c.explicitly_set(k)) bad.emplace_back(k);
    for (const char* k : {"model.g3", "model.g4", "model.omega_d", "model.Omega_d"})
        if (!c.explicitly_set(k)) bad.emplace_back(k);
    if (!bad.empty()) {
        std::string list;
        for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
        throw ConfigError("direct model form needs g3, g4, omega_d, Omega_d and no target keys; check " + list, bad);
    }
    model::OscillatorParams p;
    p.omega0 = c.explicitly_set("model.omega0") ? c.real("model.omega0") : 1.0;
    p.g3 = c.real("model.g3");
    p.g4 = c.real("model.g4");
    p.omega_d = c.real("model.omega_d");
    p.Omega_d = c.real("model.Omega_d");
    p.hbar_eff = c.real("model.hbar_eff");
    p.validate();
    return p;
}

inline double model_kerr(const Config& c, const model::OscillatorParams& p) {
    return kerr_convention(c) == model::KerrConvention::exact ? model::kerr_nonlinearity_auto(p).K
                                                              : model::second_order_kerr(p);
}

inline maps::PipelineOptions pipeline_options(const Config& c, int workers) {
    maps::PipelineOptions o;
    o.C = c.real("model.C");
    o.omega_d_over_w0 = c.real("model.omega_d_over_w0");
    o.convention = kerr_convention(c);
    o.dim_max = static_cast<int>(c.integer("floquet.dim_max"));
    o.spacing_min_dim = static_cast<int>(c.integer("floquet.spacing_min_dim"));
    o.propagator.steps = static_cast<int>(c.integer("floquet.steps"));
    o.propagator.order = c.integer("floquet.order") == 2 ? floquet::MagnusOrder::second : floquet::MagnusOrder::fourth;
    o.propagator.t0 = c.real("floquet.t0_over_Td") * 2.0 * std::numbers::pi / o.omega_d_over_w0;
    o.propagator.workers = workers;
    o.spectrum.tail_fraction = c.real("floquet.tail_fraction");
    o.spectrum.tail_weight_max = c.real("floquet.tail_weight_max");
    o.selection = c.text("floquet.level_selection") == "all" ? floquet::LevelSelection::all
                                                             : floquet::LevelSelection::converged;
    o.references = {c.real("floquet.r_poisson"), c.real("floquet.r_coe")};
    o.stats_floor = static_cast<int>(c.integer("floquet.stats_floor"));
    o.husimi_nodes = static_cast<int>(c.integer("disintegration.husimi_nodes"));
    o.entropy = c.text("disintegration.entropy_convention") == "standard" ? qphase::EntropyConvention::standard
                                                                           : qphase::EntropyConvention::over_pi;
    return o;
}

inline classical::ThresholdOptions threshold_options(const Config& c, int workers, std::uint64_t seed) {
    classical::ThresholdOptions o;
    o.K_over_w0 = c.real("classical.ray_K_over_w0");
    o.gamma_lo = c.real("classical.gamma_lo");
    o.gamma_hi = c.real("classical.gamma_hi");
    o.C = c.real("model.C");
    o.omega_d_over_w0 = c.real("model.omega_d_over_w0");
    o.convention = kerr_convention(c);
    o.probe_count = static_cast<int>(c.integer("classical.probe_count"));
    o.probe_radius_frac = c.real("classical.probe_radius_frac");
    o.seed = seed;
    o.grid = static_cast<int>(c.integer("classical.grid"));
    o.bbox_scale = c.real("classical.bbox_scale");
    o.gamma_tol = c.real("classical.gamma_tol");
    o.absolute_min = c.real("classical.absolute_min");
    o.lyap.n_periods = static_cast<int>(c.integer("classical.n_periods"));
    o.lyap.integrator.rel_tol = c.real("classical.rel_tol");
    o.lyap.integrator.abs_tol = c.real("classical.abs_tol");
    o.workers = workers;
    return o;
}

inline json scales_json(const model::DerivedScales& s) {
    return {{"K", s.K},       {"K2", s.K2},         {"eps2", s.eps2},       {"Pi", s.Pi},
            {"Gamma", s.Gamma}, {"n_in", s.n_in},   {"d_minus", s.d_minus}, {"d_plus", s.d_plus},
            {"T_d", s.T_d},   {"gamma_K", s.gamma_K()}, {"inner_double_well", s.inner_double_well}};
}

inline json params_json(const model::OscillatorParams& p) {
    return {{"omega0", p.omega0}, {"g3", p.g3},           {"g4", p.g4},
            {"omega_d", p.omega_d}, {"Omega_d", p.Omega_d}, {"hbar_eff", p.hbar_eff}};
}

inline void write_grid_pair(Context& ctx, const qphase::GridField& f, const std::string& stem,
                            const std::string& value_name) {
    qphase::write_grid_binary(f, ctx.path(stem + ".kgrid"));
    qphase::write_grid_csv(f, ctx.path(stem + ".csv"), value_name);
}

// ---- subcommands ---------------------------------------------------------

inline int cmd_chaos_map(Context& ctx) {
    const Config& c = ctx.cfg;
    maps::ChaosMapSpec spec;
    spec.K_values = c.reals("map.K_values");
    if (spec.K_values.empty())
        spec.K_values = maps::ChaosMapSpec::log_axis(c.real("map.K_min"), c.real("map.K_max"),
                                                     static_cast<int>(c.integer("map.K_count")));
    spec.Gamma_values = c.reals("map.Gamma_values");
    if (spec.Gamma_values.empty())
        spec.Gamma_values = maps::ChaosMapSpec::lin_axis(c.real("map.Gamma_min"), c.real("map.Gamma_max"),
                                                         static_cast<int>(c.integer("map.Gamma_count")));
    spec.pipeline = pipeline_options(c, ctx.workers);
    spec.thresholds = {c.real("map.threshold_inner"), c.real("map.threshold_merge")};
    spec.with_cat = c.boolean("map.with_cat");
    spec.with_lyapunov = c.boolean("map.with_lyapunov");
    spec.classical = threshold_options(c, 1, ctx.seed);
    spec.seed = ctx.seed;
    spec.workers = ctx.workers;
    if (ctx.verbose)
        spec.progress = [&](int d, int n) { ctx.log("cell " + std::to_string(d) + "/" + std::to_string(n)); };
    const maps::ChaosMapGrid g = maps::chaos_map(spec);
    json settings = maps::settings_json(spec.pipeline);
    if (spec.with_lyapunov) settings["classical"] = maps::settings_json(spec.classical);
    maps::save_chaos_map(g, ctx.path("csv"), ctx.provenance(settings));
    ctx.files.push_back(ctx.files.back() + ".json");
    int valid = 0, failed = 0;
    for (const auto& cell : g.cells) {
        valid += cell.valid;
        failed += (cell.flags & maps::cell_failed) != 0;
    }
    write_manifest(ctx);
    *ctx.out << "cells " << g.cells.size() << " valid " << valid << " failed " << failed
             << " threshold_violations " << maps::threshold_violations(g) << "\n";
    for (const auto& cell : g.cells)
        *ctx.out << "K/w0 " << cell.K_over_w0 << " Gamma " << cell.Gamma << " r_bar " << cell.r_bar
                 << (cell.valid ? "" : " (invalid)") << "\n";
    return exit_ok;
}

inline int cmd_disintegration(Context& ctx) {
    const Config& c = ctx.cfg;
    maps::DisintegrationOptions o;
    o.pipeline = pipeline_options(c, ctx.workers);
    o.thresholds = {c.real("map.threshold_inner"), c.real("map.threshold_merge")};
    o.quality_floor = c.real("disintegration.quality_floor");
    o.entropy = c.boolean("disintegration.entropy");
    o.workers = ctx.workers;
    if (ctx.verbose)
        o.progress = [&](int d, int n) { ctx.log("row " + std::to_string(d) + "/" + std::to_string(n)); };
    std::vector<std::pair<int, qphase::GridField>> grids;
    if (c.boolean("disintegration.husimi_grids")) {
        const int nodes = static_cast<int>(c.integer("disintegration.husimi_nodes"));
        o.on_state = [&, nodes](int k, double, const Eigen::VectorXcd& psi, const model::DerivedScales& s) {
            const qphase::PhaseGrid g = qphase::double_well_grid(s, 1.0, nodes);
            grids.emplace_back(k, qphase::husimi(psi, g, 1.0, 1, 1e-6, 1.0).field);
        };
    }
    const maps::DisintegrationScan s = maps::disintegration_scan(c.real("disintegration.Gamma"),
                                                                 c.reals("disintegration.K_values"), o);
    maps::save_scan(s, ctx.path("csv"), ctx.provenance(maps::settings_json(o.pipeline)));
    ctx.files.push_back(ctx.files.back() + ".json");
    std::sort(grids.begin(), grids.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, f] : grids) {
        // rows are sorted by K inside the scan; name grids by row
        write_grid_pair(ctx, f, "husimi-row" + std::to_string(k), "Q");
    }
    write_manifest(ctx);
    *ctx.out << "Gamma " << s.Gamma << " label_flips " << s.label_flips() << "\n";
    for (const auto& r : s.rows)
        *ctx.out << "K/w0 " << r.K_over_w0 << " n_min " << r.n_min << " S_min " << r.S_min << " quality "
                 << r.quality << " N " << r.N << (r.converged ? "" : " (unconverged)") << " "
                 << maps::regime_name(r.regime) << (r.failed ? " FAILED: " + r.message : "") << "\n";
    return exit_ok;
}

inline int cmd_floquet_spectrum(Context& ctx) {
    const Config& c = ctx.cfg;
    const model::OscillatorParams p = model_params(c);
    const model::DerivedScales sc = model::derived_scales(p, model_kerr(c, p));
    maps::PipelineOptions o = pipeline_options(c, ctx.workers);
    o.propagator.t0 = c.real("floquet.t0_over_Td") * p.drive_period();
    int N = static_cast<int>(c.integer("floquet.dim"));
    if (N == 0) N = maps::initial_dim(sc.Gamma, o);
    ctx.log("N = " + std::to_string(N));
    floquet::PropagatorReport rep;
    const Eigen::MatrixXcd U = floquet::propagate_one_period(p, model::FockSpace(N), o.propagator, &rep);
    const floquet::FloquetSolution sol = floquet::floquet_spectrum(U, p.drive_period(), o.spectrum);
    const std::string csv_path = ctx.path("spectrum.csv");
    floquet::write_spectrum_csv(sol, p.omega0, csv_path);

    json summary = {{"params", params_json(p)},
                    {"scales", scales_json(sc)},
                    {"N", N},
                    {"steps_used", rep.steps_used},
                    {"unitarity_defect", rep.unitarity_defect},
                    {"converged_states", sol.converged_count()},
                    {"max_residual", sol.max_residual}};
    const int usable = o.selection == floquet::LevelSelection::all ? sol.N : sol.converged_count();
    if (usable >= 3) {
        const auto st = floquet::spacing_ratio(sol, -1.0, o.references, o.stats_floor, o.selection);
        summary["r_tilde"] = st.r_tilde;
        summary["r_bar"] = st.r_bar;
        summary["levels"] = st.count;
        summary["low_count"] = st.low_count;
    }
    if (sc.Gamma > 0.0) {
        const qphase::CatPair cat = qphase::find_cat_pair(sol, sc);
        summary["cat"] = {{"first", cat.first},       {"second", cat.second},   {"n_min", cat.n_min},
                          {"quality", cat.quality},   {"splitting", cat.splitting},
                          {"splitting_mod_pi", cat.splitting_mod_pi}};
    }
    write_text(ctx.path("summary.json"), summary.dump(2) + "\n");
    write_manifest(ctx);
    *ctx.out << summary.dump(2) << "\n";
    return exit_ok;
}

inline int cmd_phase_portrait(Context& ctx) {
    const Config& c = ctx.cfg;
    const model::OscillatorParams p = model_params(c);
    const model::DerivedScales sc = model::derived_scales(p, model_kerr(c, p));
    const double hbar = p.hbar_eff;
    model::ClassicalParams cp = model::classical_from_quantum(p, hbar);
    cp.t0 = c.real("floquet.t0_over_Td") * p.drive_period();
    const double window = c.real("phase.window_scale");
    // quantum window in units with unit commutator; classical coordinates are sqrt(hbar) larger
    const qphase::PhaseGrid qwin = qphase::double_well_grid(sc, 1.0, 2, window);
    const double s = std::sqrt(hbar);
    const qphase::PhaseGrid cwin{qwin.q_min * s, qwin.q_max * s, qwin.p_min * s, qwin.p_max * s, 2, 2};

    // lemniscate in classical coordinates
    {
        const classical::Lemniscate L = classical::lemniscate(sc, 500);
        std::ostringstream os;
        os << ctx.csv_banner() << "lobe,q,p\n";
        for (int lobe = 0; lobe < 2; ++lobe)
            for (const auto& pt : lobe == 0 ? L.right : L.left)
                os << lobe << ',' << csv::format_double(pt.q * s) << ',' << csv::format_double(pt.p * s) << '\n';
        write_text(ctx.path("lemniscate.csv"), os.str());
    }

    const int orbits = static_cast<int>(c.integer("phase.orbits"));
    if (orbits > 0) {
        std::vector<classical::PhasePoint> ics;
        const int along_q = (orbits + 1) / 2, along_p = orbits - along_q;
        const double qc = 0.5 * (cwin.q_min + cwin.q_max);
        for (int k = 0; k < along_q; ++k)
            ics.push_back({cwin.q_min + (cwin.q_max - cwin.q_min) * (k + 0.5) / along_q, 0.0});
        for (int k = 0; k < along_p; ++k)
            ics.push_back({qc, cwin.p_min + (cwin.p_max - cwin.p_min) * (k + 0.5) / along_p});
        ctx.log("Poincare section: " + std::to_string(ics.size()) + " orbits");
        const auto sec = classical::poincare_section(ics, cp, static_cast<int>(c.integer("phase.section_periods")),
                                                     {}, ctx.workers);
        std::ostringstream os;
        os << ctx.csv_banner() << "orbit,k,q,p,escaped\n";
        for (const auto& o : sec)
            for (std::size_t k = 0; k < o.points.size(); ++k)
                os << o.id << ',' << k << ',' << csv::format_double(o.points[k].q) << ','
                   << csv::format_double(o.points[k].p) << ',' << (o.escaped ? 1 : 0) << '\n';
        write_text(ctx.path("poincare.csv"), os.str());
    }

    const int ln = static_cast<int>(c.integer("phase.lambda_nodes"));
    if (ln >= 2) {
        qphase::GridField f;
        f.grid = {cwin.q_min, cwin.q_max, cwin.p_min, cwin.p_max, ln, ln};
        f.hbar_eff = hbar;
        f.values.assign(static_cast<std::size_t>(ln) * ln, 0.0);
        classical::LyapunovOptions lo;
        lo.n_periods = static_cast<int>(c.integer("phase.lambda_periods"));
        lo.integrator.rel_tol = c.real("classical.rel_tol");
        lo.integrator.abs_tol = c.real("classical.abs_tol");
        ctx.log("lambda field: " + std::to_string(ln * ln) + " orbits");
        parallel_for(ln * ln, ctx.workers, [&](int k) {
            const int i = k % ln, j = k / ln;
            const auto r = classical::lyapunov({f.grid.q(i), f.grid.p(j)}, cp, lo);
            // escaped orbits are stored as +inf
            f.at(i, j) = r.escaped ? std::numeric_limits<double>::infinity() : r.lambda;
        });
        write_grid_pair(ctx, f, "lambda", "lambda");
    }

    const int hn = static_cast<int>(c.integer("phase.husimi_nodes"));
    const int pn = static_cast<int>(c.integer("phase.participation_nodes"));
    if (hn >= 2 || pn >= 2) {
        maps::PipelineOptions o = pipeline_options(c, ctx.workers);
        o.propagator.t0 = cp.t0;
        int N = static_cast<int>(c.integer("floquet.dim"));
        if (N == 0) {
            // coherent states at the window corners must fit in the truncation
            const double corner = std::max(std::norm(qphase::alpha_of(qwin.q_min, qwin.p_max)),
                                           std::norm(qphase::alpha_of(qwin.q_max, qwin.p_max)));
            N = std::min(o.dim_max, std::max(maps::initial_dim(sc.Gamma, o), static_cast<int>(std::ceil(1.5 * corner)) + 20));
        }
        ctx.log("Floquet solution at N = " + std::to_string(N));
        const floquet::FloquetSolution sol = maps::solve_floquet(p, N, o);
        if (hn >= 2) {
            const qphase::CatPair cat = qphase::find_cat_pair(sol, sc);
            const qphase::PhaseGrid g{qwin.q_min, qwin.q_max, qwin.p_min, qwin.p_max, hn, hn};
            write_grid_pair(ctx, qphase::husimi(sol.states.col(cat.first), g, 1.0, ctx.workers, 1e-6, 1.0).field,
                            "husimi", "Q");
        }
        if (pn >= 2) {
            qphase::GridField f;
            f.grid = {qwin.q_min, qwin.q_max, qwin.p_min, qwin.p_max, pn, pn};
            f.values.assign(static_cast<std::size_t>(pn) * pn, std::nan(""));
            parallel_for(pn * pn, ctx.workers, [&](int k) {
                const int i = k % pn, j = k / pn;
                try {
                    Eigen::VectorXcd a = qphase::coherent_amplitudes(qphase::alpha_of(f.grid.q(i), f.grid.p(j)), N);
                    a /= a.norm();
                    f.at(i, j) = qphase::participation_ratio(a, sol).ratio;
                } catch (const TruncationError&) {
                    // left as nan: the coherent state does not fit in N
                }
            });
            write_grid_pair(ctx, f, "participation", "participation_ratio");
        }
    }
    write_manifest(ctx, {{"scales", scales_json(sc)}});
    *ctx.out << "wrote " << ctx.files.size() << " files to " << ctx.out_dir << "\n";
    return exit_ok;
}

inline int cmd_thresholds(Context& ctx, const std::string& ray) {
    if (!ray.empty()) {
        const auto colon = ray.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--gamma-ray expects lo:hi, got '" + ray + "'", {"--gamma-ray"});
        std::vector<std::string> bad;
        try {
            ctx.cfg.set("classical.gamma_lo", ray.substr(0, colon));
        } catch (const ConfigError&) {
            bad.emplace_back("classical.gamma_lo");
        }
        try {
            ctx.cfg.set("classical.gamma_hi", ray.substr(colon + 1));
        } catch (const ConfigError&) {
            bad.emplace_back("classical.gamma_hi");
        }
        if (!bad.empty()) throw ConfigError("--gamma-ray: bad bound in '" + ray + "'", bad);
    }
    const Config& c = ctx.cfg;
    if (!(c.real("classical.gamma_lo") < c.real("classical.gamma_hi")))
        throw ConfigError("gamma ray must satisfy lo < hi", {"classical.gamma_lo", "classical.gamma_hi"});
    const classical::ThresholdOptions o = threshold_options(c, ctx.workers, ctx.seed);
    const std::string which = c.text("classical.which");
    ctx.log("scanning Gamma in [" + std::to_string(o.gamma_lo) + ", " + std::to_string(o.gamma_hi) + "]");
    const classical::ThresholdResult r = classical::threshold_scan(o, which != "merge", which != "inner");
    std::ostringstream os;
    os << ctx.csv_banner() << "threshold,Gamma,gamma_K,K_over_w0\n";
    if (which != "merge") {
        os << "inner," << csv::format_double(r.inner.Gamma) << ',' << csv::format_double(r.inner.gamma_K) << ','
           << csv::format_double(o.K_over_w0) << '\n';
        *ctx.out << "inner Gamma K/omega0 = " << r.inner.gamma_K << " (Gamma = " << r.inner.Gamma << ")\n";
    }
    if (which != "inner") {
        os << "merge," << csv::format_double(r.merge.Gamma) << ',' << csv::format_double(r.merge.gamma_K) << ','
           << csv::format_double(o.K_over_w0) << '\n';
        *ctx.out << "merge Gamma K/omega0 = " << r.merge.gamma_K << " (Gamma = " << r.merge.Gamma << ")\n";
    }
    write_text(ctx.path("csv"), os.str());
    write_manifest(ctx, {{"settings", maps::settings_json(o)}, {"evaluations", r.evaluations}});
    return exit_ok;
}

inline int cmd_snail_params(Context& ctx) {
    const Config& c = ctx.cfg;
    model::SnailParams sp;
    sp.alpha = c.real("snail.alpha");
    sp.m = static_cast<int>(c.integer("snail.m"));
    sp.phi_ext = 2.0 * std::numbers::pi * c.real("snail.phi_ext_over_2pi");
    sp.M = static_cast<int>(c.integer("snail.M"));
    sp.E_C = c.real("snail.E_C");
    sp.E_J = c.real("snail.E_J");
    sp.xi_J = c.real("snail.xi_J");
    const model::SnailCoefficients k = model::snail_coefficients(sp);
    const model::OscillatorParams& p = k.oscillator;
    json j = {{"phi_min", k.phi_min},
              {"c", k.c},
              {"cbar", k.cbar},
              {"p", k.p},
              {"hbar_eff", k.hbar_eff},
              {"oscillator", params_json(p)},
              {"g3_over_w0", p.g3 / p.omega0},
              {"g4_over_w0", p.g4 / p.omega0},
              {"K2_over_w0", model::second_order_kerr(p) / p.omega0},
              {"double_well", p.has_double_well()}};
    write_text(ctx.path("json"), j.dump(2) + "\n");
    write_manifest(ctx);
    *ctx.out << j.dump(2) << "\n";
    return exit_ok;
}

inline int cmd_validate(Context& ctx) {
    const auto checks = run_invariants(ctx.cfg.real("validate.tolerance_scale"));
    json report = json::array();
    bool ok = true;
    for (const auto& ch : checks) {
        ok = ok && ch.pass;
        report.push_back({{"name", ch.name},
                          {"value", ch.value},
                          {"tolerance", ch.tolerance},
                          {"pass", ch.pass},
                          {"message", ch.message}});
        *ctx.out << (ch.pass ? "PASS " : "FAIL ") << ch.name << " value " << ch.value << " tolerance "
                 << ch.tolerance << (ch.message.empty() ? "" : " (" + ch.message + ")") << "\n";
    }
    write_text(ctx.path("json"), report.dump(2) + "\n");
    write_manifest(ctx, {{"all_passed", ok}});
    return ok ? exit_ok : exit_invariant_failed;
}

// ---- entry point -----------------------------------------------------------

inline std::string error_json(const std::string& kind, const std::string& message,
                              const std::vector<std::string>& keys = {}) {
    json j = {{"error", kind}, {"message", message}};
    if (!keys.empty()) j["keys"] = keys;
    return j.dump();
}

/// Parses argv, runs one subcommand and returns the process exit code.
/// Errors go to `err` as one line of JSON.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Driven Kerr parametric oscillator: Floquet chaos maps, classical thresholds, cat diagnostics",
                 "kpo"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);

    struct Common {
        std::string config, out;
        std::optional<int> workers;
        std::optional<std::uint64_t> seed;
        bool verbose = false;
        std::vector<std::string> sets;
    } common;
    std::string gamma_ray;

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"chaos-map", "r_bar over a (K/omega0, Gamma) grid"},
        {"disintegration", "n_min and S_min of the cat pair along K/omega0 at fixed Gamma"},
        {"floquet-spectrum", "quasienergies and summary at one parameter point"},
        {"phase-portrait", "Poincare section, lambda field, Husimi and participation grids"},
        {"thresholds", "inner and merge Gamma K/omega0 from classical Lyapunov exponents"},
        {"snail-params", "SNAIL Taylor coefficients and the quartic-model mapping"},
        {"validate", "run the invariant suite; nonzero exit when any check fails"},
    };
    for (const auto& [name, desc] : subs) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->add_option("--config", common.config, "INI file with [model], [floquet], ... sections")
            ->check(CLI::ExistingFile);
        s->add_option("--out", common.out, std::string("output directory (default $") + kOutDirEnv + " or ./kpo-out)");
        s->add_option("--workers", common.workers, "worker threads")->check(CLI::Range(1, 4096));
        s->add_option("--seed", common.seed, "seed for stochastic steps");
        s->add_flag("--verbose", common.verbose, "progress on stderr");
        s->add_option("--set", common.sets, "override one key: section.key=value (repeatable)");
        if (name == "thresholds") s->add_option("--gamma-ray", gamma_ray, "Gamma range lo:hi on the ray");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what()) << std::endl;
        return exit_usage;
    }

    Context ctx;
    ctx.subcommand = app.get_subcommands().front()->get_name();
    ctx.out = &out;
    ctx.err = &err;
    try {
        std::vector<std::string> sets = common.sets;
        // flags win over file values
        if (common.workers) sets.push_back("run.workers=" + std::to_string(*common.workers));
        if (common.seed) sets.push_back("run.seed=" + std::to_string(*common.seed));
        if (!common.out.empty()) sets.push_back("run.out=" + common.out);
        if (common.verbose) sets.emplace_back("run.verbose=true");
        ctx.cfg = Config::load(common.config.empty() ? std::nullopt : std::optional<std::string>(common.config), sets);
        ctx.workers = static_cast<int>(ctx.cfg.integer("run.workers"));
        ctx.seed = static_cast<std::uint64_t>(ctx.cfg.integer("run.seed"));
        ctx.verbose = ctx.cfg.boolean("run.verbose");
        ctx.out_dir = ctx.cfg.text("run.out");
        if (ctx.out_dir.empty()) {
            const char* env = std::getenv(kOutDirEnv);
            ctx.out_dir = env && *env ? env : "kpo-out";
        }
        std::filesystem::create_directories(ctx.out_dir);

        if (ctx.subcommand == "chaos-map") return cmd_chaos_map(ctx);
        if (ctx.subcommand == "disintegration") return cmd_disintegration(ctx);
        if (ctx.subcommand == "floquet-spectrum") return cmd_floquet_spectrum(ctx);
        if (ctx.subcommand == "phase-portrait") return cmd_phase_portrait(ctx);
        if (ctx.subcommand == "thresholds") return cmd_thresholds(ctx, gamma_ray);
        if (ctx.subcommand == "snail-params") return cmd_snail_params(ctx);
        if (ctx.subcommand == "validate") return cmd_validate(ctx);
        err << error_json("usage", "unknown subcommand " + ctx.subcommand) << std::endl;
        return exit_usage;
    } catch (const ConfigError& e) {
        err << error_json(e.kind(), e.what(), e.keys()) << std::endl;
        return exit_usage;
    } catch (const Error& e) {
        err << error_json(e.kind(), e.what()) << std::endl;
        return exit_runtime;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_json("io", e.what()) << std::endl;
        return exit_runtime;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()) << std::endl;
        return exit_runtime;
    }
}

}  // namespace kpo::cli
