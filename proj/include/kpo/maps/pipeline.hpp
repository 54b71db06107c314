#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "kpo/core/error.hpp"
#include "kpo/floquet/propagator.hpp"
#include "kpo/floquet/spacing.hpp"
#include "kpo/floquet/spectrum.hpp"
#include "kpo/model/hamiltonian.hpp"
#include "kpo/qphase/cat.hpp"
#include "kpo/qphase/husimi.hpp"

namespace kpo::maps {

/// Everything a (K/omega0, Gamma) point needs beyond its coordinates.
struct PipelineOptions {
    double C = 10.0;
    double omega_d_over_w0 = 1.999866;
    model::KerrConvention convention = model::KerrConvention::exact;

    // truncation: N = max(dim_floor, ceil(dim_per_gamma Gamma)), doubled
    // until the cat pair passes the tail test, never above dim_max
    int dim_floor = 64;
    double dim_per_gamma = 8.0;
    int dim_max = 1600;
    /// Level statistics need a long converged ladder; see spacing_point.
    int spacing_min_dim = 800;

    floquet::PropagatorOptions propagator;
    floquet::SpectrumOptions spectrum;
    floquet::LevelSelection selection = floquet::LevelSelection::converged;
    floquet::RatioReferences references;
    int stats_floor = 50;

    int husimi_nodes = 161;
    qphase::EntropyConvention entropy = qphase::EntropyConvention::over_pi;
};

inline int initial_dim(double Gamma, const PipelineOptions& opt) {
    const double n = std::ceil(opt.dim_per_gamma * std::abs(Gamma));
    return std::min(opt.dim_max, std::max(opt.dim_floor, static_cast<int>(n)));
}

struct PointSetup {
    model::OscillatorParams params;
    model::DerivedScales scales;
};

inline PointSetup point_setup(double K_over_w0, double Gamma, const PipelineOptions& opt) {
    PointSetup s;
    s.params = model::params_from_targets(K_over_w0, Gamma, opt.C, opt.omega_d_over_w0, opt.convention);
    const double K = opt.convention == model::KerrConvention::exact ? model::kerr_nonlinearity_auto(s.params).K
                                                                    : model::second_order_kerr(s.params);
    s.scales = model::derived_scales(s.params, K);
    return s;
}

inline floquet::FloquetSolution solve_floquet(const model::OscillatorParams& p, int N, const PipelineOptions& opt) {
    const Eigen::MatrixXcd U = floquet::propagate_one_period(p, model::FockSpace(N), opt.propagator);
    return floquet::floquet_spectrum(U, p.drive_period(), opt.spectrum);
}

struct CatPoint {
    PointSetup setup;
    int N = 0;
    bool converged = false;  ///< both cat states pass the tail test at N
    qphase::CatPair cat;
    Eigen::VectorXcd state;  ///< F_min, the first state of the pair
    double tail_first = 0.0, tail_second = 0.0;
    double S_min = std::numeric_limits<double>::quiet_NaN();
    bool wide_grid = false;  ///< Husimi needed the full truncation disc
    qphase::Coverage coverage = qphase::Coverage::ok;
};

/// Husimi entropy of one Floquet state. The double-well window is tried first;
/// states that leak out of it are integrated over a square holding the whole
/// truncated Fock space (|alpha|^2 <= N plus margin).
inline double state_entropy(const Eigen::VectorXcd& psi, const model::DerivedScales& sc, const PipelineOptions& opt,
                            bool* wide, qphase::Coverage* cov) {
    try {
        auto h = qphase::husimi(psi, qphase::double_well_grid(sc, 1.0, opt.husimi_nodes), 1.0,
                                opt.propagator.workers);
        *wide = false;
        *cov = h.coverage;
        return qphase::wehrl_entropy(h.field, opt.entropy);
    } catch (const CoverageError&) {
    }
    const double R = std::sqrt(2.0 * psi.size()) + 6.0;
    const int nodes = std::max(opt.husimi_nodes, static_cast<int>(std::ceil(2.0 * R * 2.0)) + 1);
    qphase::PhaseGrid g{-R, R, -R, R, nodes, nodes};
    auto h = qphase::husimi(psi, g, 1.0, opt.propagator.workers);
    *wide = true;
    *cov = h.coverage;
    return qphase::wehrl_entropy(h.field, opt.entropy);
}

/// n_min and S_min at one point. N starts from the Gamma rule and doubles
/// until both cat states are truncation-converged or dim_max is reached; the
/// last solution is reported either way.
inline CatPoint cat_point(double K_over_w0, double Gamma, const PipelineOptions& opt, bool with_entropy = true) {
    CatPoint out;
    out.setup = point_setup(K_over_w0, Gamma, opt);
    int N = initial_dim(Gamma, opt);
    floquet::FloquetSolution sol;
    for (;;) {
        sol = solve_floquet(out.setup.params, N, opt);
        out.cat = qphase::find_cat_pair(sol, out.setup.scales);
        out.converged = sol.converged[out.cat.first] && sol.converged[out.cat.second];
        if (out.converged || N >= opt.dim_max) break;
        N = std::min(opt.dim_max, 2 * N);
    }
    out.N = N;
    out.tail_first = sol.tail_weight[out.cat.first];
    out.tail_second = sol.tail_weight[out.cat.second];
    out.state = sol.states.col(out.cat.first);
    if (with_entropy)
        out.S_min = state_entropy(out.state, out.setup.scales, opt, &out.wide_grid, &out.coverage);
    return out;
}

struct SpacingPoint {
    PointSetup setup;
    int N = 0;
    int converged_levels = 0;
    bool valid = false;  ///< enough levels for the statistic (>= stats_floor)
    floquet::SpacingStats stats;
    std::optional<qphase::CatPair> cat;
};

/// r statistics at one point. The Gamma rule alone leaves too short a
/// converged ladder at small Gamma, so N = max(rule, spacing_min_dim).
/// Too few levels mark the point invalid instead of throwing.
inline SpacingPoint spacing_point(double K_over_w0, double Gamma, const PipelineOptions& opt, bool with_cat = false) {
    SpacingPoint out;
    out.setup = point_setup(K_over_w0, Gamma, opt);
    out.N = std::min(opt.dim_max, std::max(initial_dim(Gamma, opt), opt.spacing_min_dim));
    const floquet::FloquetSolution sol = solve_floquet(out.setup.params, out.N, opt);
    out.converged_levels = sol.converged_count();
    const int usable = opt.selection == floquet::LevelSelection::all ? sol.N : out.converged_levels;
    if (usable >= 3) {
        out.stats = floquet::spacing_ratio(sol, -1.0, opt.references, opt.stats_floor, opt.selection);
        out.valid = !out.stats.low_count;
    } else {
        out.stats.count = usable;
        out.stats.low_count = true;
        out.stats.r_tilde = out.stats.r_bar = std::numeric_limits<double>::quiet_NaN();
    }
    if (with_cat) out.cat = qphase::find_cat_pair(sol, out.setup.scales);
    return out;
}

}  // namespace kpo::maps
