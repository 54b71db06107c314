#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "kpo/classical/integrate.hpp"

namespace kpo::classical {

struct LyapunovOptions {
    int n_periods = 1000;
    int renorm_every = 1;  ///< periods between tangent-vector renormalizations
    IntegratorSettings integrator;
};

struct LyapunovResult {
    double lambda = 0.0;  ///< largest exponent, clipped at 0, in units of omega0 if omega0 = 1
    double raw = 0.0;     ///< unclipped finite-time estimate at the end of the run
    double band = 0.0;    ///< max - min of the finite-time estimates over the second half
    bool escaped = false;
    bool reliable = true;
    double escape_time = 0.0;
};

/// Largest Lyapunov exponent by integrating the tangent flow alongside the
/// orbit and renormalizing the tangent vector every `renorm_every` periods.
inline LyapunovResult lyapunov(PhasePoint ic, const ClassicalParams& cp, LyapunovOptions opt = {}) {
    if (opt.n_periods < 2 || opt.renorm_every < 1) throw InvalidParameter("lyapunov: bad period counts");
    IntegratorSettings s = opt.integrator;
    if (s.escape_radius == 0.0) s.escape_radius = default_escape_radius(cp);
    TangentSystem sys{cp};
    std::array<double, 4> x{ic.q, ic.p, 1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2};
    const double T = cp.drive_period();
    const int blocks = opt.n_periods / opt.renorm_every;
    double logsum = 0.0, t = 0.0, dt = 0.0;
    std::vector<double> estimates;
    estimates.reserve(blocks);
    LyapunovResult out;
    for (int b = 1; b <= blocks; ++b) {
        const double target = b * opt.renorm_every * T;
        const AdvanceResult r = advance(sys, x, t, target, dt, s);
        if (r.escaped) {
            out.escaped = true;
            out.reliable = false;
            out.escape_time = r.t;
            break;
        }
        t = target;
        const double norm = std::hypot(x[2], x[3]);
        logsum += std::log(norm);
        x[2] /= norm;
        x[3] /= norm;
        estimates.push_back(logsum / t);
    }
    if (estimates.empty()) {
        out.raw = out.lambda = 0.0;
        out.band = 0.0;
        return out;
    }
    out.raw = estimates.back();
    out.lambda = std::max(0.0, out.raw);
    const std::size_t half = estimates.size() / 2;
    const auto [lo, hi] = std::minmax_element(estimates.begin() + half, estimates.end());
    out.band = *hi - *lo;
    return out;
}

/// Stroboscopic one-period tangent map M (2x2, row-major) at `ic`; det M = 1
/// for a Hamiltonian flow.
inline std::array<double, 4> period_tangent_map(PhasePoint ic, const ClassicalParams& cp, IntegratorSettings s = {}) {
    if (s.escape_radius == 0.0) s.escape_radius = default_escape_radius(cp);
    TangentSystem sys{cp};
    std::array<double, 4> m{};
    for (int c = 0; c < 2; ++c) {
        std::array<double, 4> x{ic.q, ic.p, c == 0 ? 1.0 : 0.0, c == 0 ? 0.0 : 1.0};
        double dt = 0.0;
        const AdvanceResult r = advance(sys, x, 0.0, cp.drive_period(), dt, s);
        if (r.escaped) throw IntegrationError("tangent map: orbit escaped within one period");
        m[c] = x[2];
        m[2 + c] = x[3];
    }
    return m;
}

/// Cutoff separating chaotic exponents from the finite-time floor of a
/// regular orbit: max(3 * floor, absolute_min).
inline double chaos_cutoff(double regular_floor, double absolute_min) {
    return std::max(3.0 * regular_floor, absolute_min);
}

/// Finite-time floor at these parameters: the estimate reached by an orbit
/// of the undriven oscillator started at a small amplitude, which is regular
/// by construction. Uses the larger of its final value and band.
inline double regular_floor(const ClassicalParams& cp, const LyapunovOptions& opt) {
    ClassicalParams undriven = cp;
    undriven.Omega_d = 0.0;
    double amp = 0.1;
    if (cp.has_double_well() && cp.g4 != 0.0) amp = 0.1 * default_escape_radius(cp) / 3.0;
    const LyapunovResult r = lyapunov({amp, 0.0}, undriven, opt);
    return std::max(r.lambda, r.band);
}

}  // namespace kpo::classical
