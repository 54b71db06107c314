#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "kpo/classical/threshold.hpp"
#include "kpo/core/parallel.hpp"
#include "kpo/maps/pipeline.hpp"

namespace kpo::maps {

/// Gamma K / omega0 constants of the two classical thresholds.
struct ThresholdConstants {
    double inner = 0.0187;   ///< chaos appears at the hyperbolic point
    double merge = 0.03347;  ///< inner and outer chaotic regions join

    /// Gamma on the hyperbola Gamma K = c.
    static double gamma_on(double c, double K_over_w0) { return c / K_over_w0; }
};

enum class Regime { regular, mixed, chaotic };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::regular: return "regular";
        case Regime::mixed: return "mixed";
        case Regime::chaotic: return "chaotic";
    }
    return "?";
}

inline Regime regime_of(double gamma_K, const ThresholdConstants& t) {
    if (gamma_K >= t.merge) return Regime::chaotic;
    if (gamma_K >= t.inner) return Regime::mixed;
    return Regime::regular;
}

/// splitmix64 finalizer over (seed, i, j); stable across platforms.
inline std::uint64_t cell_seed(std::uint64_t seed, int i, int j) {
    std::uint64_t z = seed ^ (static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint64_t>(j);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct ChaosMapSpec {
    std::vector<double> K_values;      ///< K / omega0 axis
    std::vector<double> Gamma_values;  ///< Gamma axis
    PipelineOptions pipeline;
    ThresholdConstants thresholds;
    bool with_cat = false;       ///< n_min and cat quality from the spacing solution
    bool with_lyapunov = false;  ///< classical probe-disk vote per cell
    classical::ThresholdOptions classical;
    std::uint64_t seed = 1;
    int workers = 1;
    /// Called after each cell with (cells done, total); serialized.
    std::function<void(int, int)> progress;

    /// n log-spaced values from lo to hi inclusive.
    static std::vector<double> log_axis(double lo, double hi, int n) {
        if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidParameter("log_axis: need n >= 1 and 0 < lo <= hi");
        std::vector<double> v(n);
        for (int k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
        return v;
    }
    static std::vector<double> lin_axis(double lo, double hi, int n) {
        if (n < 1 || !(hi >= lo)) throw InvalidParameter("lin_axis: need n >= 1 and lo <= hi");
        std::vector<double> v(n);
        for (int k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
        return v;
    }
};

enum CellFlag : unsigned {
    cell_ok = 0,
    cell_low_count = 1u << 0,  ///< fewer converged levels than the statistics floor
    cell_failed = 1u << 1,     ///< the pipeline threw; see message
    cell_escaped = 1u << 2,    ///< classical probe orbits escaped (vote counts them as chaotic)
};

struct MapCell {
    double K_over_w0 = 0.0;
    double Gamma = 0.0;
    double gamma_K = 0.0;
    int N = 0;
    int levels = 0;
    double r_tilde = std::numeric_limits<double>::quiet_NaN();
    double r_bar = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
    unsigned flags = cell_ok;
    std::string message;
    double n_min = std::numeric_limits<double>::quiet_NaN();
    double cat_quality = std::numeric_limits<double>::quiet_NaN();
    double lambda_median = std::numeric_limits<double>::quiet_NaN();
    double lambda_cutoff = std::numeric_limits<double>::quiet_NaN();
    int lyapunov_chaotic = -1;  ///< -1 not computed, 0 regular, 1 chaotic
    std::uint64_t seed = 0;
};

struct ChaosMapGrid {
    std::vector<double> K_values;
    std::vector<double> Gamma_values;
    double C = 10.0;
    double omega_d_over_w0 = 1.999866;
    ThresholdConstants thresholds;
    std::vector<MapCell> cells;  ///< K fastest: cell(i, j) = cells[j * nK + i]

    int nK() const { return static_cast<int>(K_values.size()); }
    int nG() const { return static_cast<int>(Gamma_values.size()); }
    MapCell& cell(int i, int j) { return cells[static_cast<std::size_t>(j) * nK() + i]; }
    const MapCell& cell(int i, int j) const { return cells[static_cast<std::size_t>(j) * nK() + i]; }
};

inline void compute_cell(MapCell& c, const ChaosMapSpec& spec) {
    try {
        const SpacingPoint sp = spacing_point(c.K_over_w0, c.Gamma, spec.pipeline, spec.with_cat);
        c.N = sp.N;
        c.levels = sp.stats.count;
        c.r_tilde = sp.stats.r_tilde;
        c.r_bar = sp.stats.r_bar;
        c.valid = sp.valid;
        c.gamma_K = sp.setup.scales.gamma_K();
        if (!sp.valid) c.flags |= cell_low_count;
        if (sp.cat) {
            c.n_min = sp.cat->n_min;
            c.cat_quality = sp.cat->quality;
        }
        if (spec.with_lyapunov) {
            classical::ThresholdOptions o = spec.classical;
            o.K_over_w0 = c.K_over_w0;
            o.C = spec.pipeline.C;
            o.omega_d_over_w0 = spec.pipeline.omega_d_over_w0;
            o.convention = spec.pipeline.convention;
            o.seed = c.seed;
            o.workers = 1;
            const classical::ThresholdRay ray(o);
            const classical::RayPoint r = ray.at(c.Gamma);
            c.lambda_median = ray.probe_median(r);
            c.lambda_cutoff = ray.cutoff(r);
            if (std::isinf(c.lambda_median)) c.flags |= cell_escaped;
            c.lyapunov_chaotic = c.lambda_median > c.lambda_cutoff ? 1 : 0;
        }
    } catch (const Error& e) {
        c.flags |= cell_failed;
        c.valid = false;
        c.message = std::string(e.kind()) + ": " + e.what();
    }
}

/// r_bar over the (K, Gamma) grid. Each cell is an independent computation
/// with its own seed, so the grid does not depend on the evaluation order or
/// on the worker count. Failing cells are flagged and the map completes.
inline ChaosMapGrid chaos_map(const ChaosMapSpec& spec) {
    if (spec.K_values.empty() || spec.Gamma_values.empty()) throw InvalidParameter("chaos_map: empty axis");
    for (double k : spec.K_values)
        if (!(k > 0.0) || !std::isfinite(k)) throw InvalidParameter("chaos_map: K values must be positive");
    for (double g : spec.Gamma_values)
        if (!(g > 0.0) || !std::isfinite(g)) throw InvalidParameter("chaos_map: Gamma values must be positive");
    ChaosMapGrid grid;
    grid.K_values = spec.K_values;
    grid.Gamma_values = spec.Gamma_values;
    grid.C = spec.pipeline.C;
    grid.omega_d_over_w0 = spec.pipeline.omega_d_over_w0;
    grid.thresholds = spec.thresholds;
    grid.cells.resize(static_cast<std::size_t>(grid.nK()) * grid.nG());
    for (int j = 0; j < grid.nG(); ++j)
        for (int i = 0; i < grid.nK(); ++i) {
            MapCell& c = grid.cell(i, j);
            c.K_over_w0 = spec.K_values[i];
            c.Gamma = spec.Gamma_values[j];
            c.gamma_K = c.K_over_w0 * c.Gamma;
            c.seed = cell_seed(spec.seed, i, j);
        }
    ChaosMapSpec inner = spec;
    // cells run in parallel; each propagator stays single-threaded unless there is one cell
    if (grid.cells.size() > 1 && spec.workers > 1) inner.pipeline.propagator.workers = 1;
    const int total = static_cast<int>(grid.cells.size());
    std::atomic<int> done{0};
    std::mutex mu;
    parallel_for(total, spec.workers, [&](int k) {
        compute_cell(grid.cells[k], inner);
        const int d = ++done;
        if (spec.progress) {
            std::lock_guard lk(mu);
            spec.progress(d, total);
        }
    });
    return grid;
}

/// Fraction of valid cells on the wrong side of the merge hyperbola: regular
/// (r_bar < 0.2) above it or chaotic (r_bar > 0.8) below the inner one.
inline double threshold_violations(const ChaosMapGrid& g) {
    int bad = 0, n = 0;
    for (const MapCell& c : g.cells) {
        if (!c.valid) continue;
        ++n;
        if (c.gamma_K > g.thresholds.merge && c.r_bar < 0.2) ++bad;
        if (c.gamma_K < g.thresholds.inner && c.r_bar > 0.8) ++bad;
    }
    return n ? static_cast<double>(bad) / n : 0.0;
}

}  // namespace kpo::maps
