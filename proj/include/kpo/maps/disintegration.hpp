#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "kpo/core/parallel.hpp"
#include "kpo/maps/chaos_map.hpp"
#include "kpo/maps/pipeline.hpp"

namespace kpo::maps {

struct DisintegrationRow {
    double K_over_w0 = 0.0;
    double gamma_K = 0.0;
    int N = 0;
    bool converged = false;
    double n_min = std::numeric_limits<double>::quiet_NaN();
    double S_min = std::numeric_limits<double>::quiet_NaN();
    double quality = std::numeric_limits<double>::quiet_NaN();
    bool wide_grid = false;
    bool disintegrated = false;  ///< quality below the cat floor
    Regime regime = Regime::regular;
    bool failed = false;
    std::string message;
};

struct DisintegrationScan {
    double Gamma = 0.0;
    double C = 10.0;
    double omega_d_over_w0 = 1.999866;
    ThresholdConstants thresholds;
    std::vector<DisintegrationRow> rows;

    /// Number of label changes along increasing K (rows are kept sorted).
    int label_flips() const {
        int f = 0;
        for (std::size_t k = 1; k < rows.size(); ++k) f += (is_chaotic(rows[k]) != is_chaotic(rows[k - 1]));
        return f;
    }
    static bool is_chaotic(const DisintegrationRow& r) { return r.regime == Regime::chaotic; }
};

struct DisintegrationOptions {
    PipelineOptions pipeline;
    ThresholdConstants thresholds;
    double quality_floor = 0.3;
    bool entropy = true;
    int workers = 1;
    std::function<void(int, int)> progress;  ///< (rows done, total), serialized
    /// Receives F_min of each row (row index, K, state) when set.
    std::function<void(int, double, const Eigen::VectorXcd&, const model::DerivedScales&)> on_state;
};

/// n_min and S_min of the cat pair along K / omega0 at fixed Gamma. Rows are
/// labelled against the merge hyperbola Gamma K = thresholds.merge, so along
/// increasing K the label changes once.
inline DisintegrationScan disintegration_scan(double Gamma, std::vector<double> K_list,
                                              const DisintegrationOptions& opt = {}) {
    if (K_list.empty()) throw InvalidParameter("disintegration_scan: empty K list");
    for (double k : K_list)
        if (!(k > 0.0) || !std::isfinite(k)) throw InvalidParameter("disintegration_scan: K values must be positive");
    std::sort(K_list.begin(), K_list.end());
    DisintegrationScan scan;
    scan.Gamma = Gamma;
    scan.C = opt.pipeline.C;
    scan.omega_d_over_w0 = opt.pipeline.omega_d_over_w0;
    scan.thresholds = opt.thresholds;
    scan.rows.resize(K_list.size());
    PipelineOptions po = opt.pipeline;
    if (K_list.size() > 1 && opt.workers > 1) po.propagator.workers = 1;
    const int total = static_cast<int>(K_list.size());
    std::atomic<int> done{0};
    std::mutex mu;
    parallel_for(total, opt.workers, [&](int k) {
        DisintegrationRow& r = scan.rows[k];
        r.K_over_w0 = K_list[k];
        r.gamma_K = Gamma * K_list[k];
        r.regime = regime_of(r.gamma_K, opt.thresholds);
        try {
            const CatPoint cp = cat_point(K_list[k], Gamma, po, opt.entropy);
            r.N = cp.N;
            r.converged = cp.converged;
            r.n_min = cp.cat.n_min;
            r.S_min = cp.S_min;
            r.quality = cp.cat.quality;
            r.wide_grid = cp.wide_grid;
            r.disintegrated = cp.cat.quality < opt.quality_floor;
            r.gamma_K = cp.setup.scales.gamma_K();
            r.regime = regime_of(r.gamma_K, opt.thresholds);
            if (opt.on_state) {
                std::lock_guard lk(mu);
                opt.on_state(k, r.K_over_w0, cp.state, cp.setup.scales);
            }
        } catch (const Error& e) {
            r.failed = true;
            r.message = std::string(e.kind()) + ": " + e.what();
        }
        const int d = ++done;
        if (opt.progress) {
            std::lock_guard lk(mu);
            opt.progress(d, total);
        }
    });
    return scan;
}

}  // namespace kpo::maps
