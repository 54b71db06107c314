#pragma once

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "kpo/classical/dynamics.hpp"
#include "kpo/core/error.hpp"

namespace kpo::classical {

struct IntegratorSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    /// |q| or |p| beyond this ends the orbit; <= 0 disables the check.
    double escape_radius = 0.0;
    double min_step = 1e-10;
    double initial_step = 0.05;
};

/// Escape radius 3 |d+| of the static potential, or +inf without a double well.
inline double default_escape_radius(const ClassicalParams& cp) {
    if (!cp.has_double_well() || cp.g4 == 0.0) return std::numeric_limits<double>::infinity();
    const double root = std::sqrt(cp.g3 * cp.g3 - 2.0 * cp.g4 * cp.omega0);
    const double d_plus = std::numbers::sqrt2 * (-cp.g3 + root) / (4.0 * cp.g4);
    return 3.0 * std::abs(d_plus);
}

struct AdvanceResult {
    bool escaped = false;
    double t = 0.0;  ///< time reached (escape time when escaped)
    long steps = 0;
};

/// Adaptive 7(8) Runge-Kutta-Fehlberg stepping from t to exactly t_end
/// (either direction). `dt` carries the step-size suggestion between calls.
/// Escape, step-size underflow, or a non-finite state stop the advance.
template <class System, class State>
AdvanceResult advance(const System& sys, State& x, double t, double t_end, double& dt, const IntegratorSettings& s) {
    namespace ode = boost::numeric::odeint;
    using Stepper = ode::runge_kutta_fehlberg78<State>;
    auto stepper = ode::make_controlled(s.abs_tol, s.rel_tol, Stepper());
    AdvanceResult r;
    const double dir = t_end >= t ? 1.0 : -1.0;
    if (dt == 0.0 || !std::isfinite(dt)) dt = s.initial_step;
    dt = dir * std::abs(dt);
    const double radius = s.escape_radius > 0.0 ? s.escape_radius : std::numeric_limits<double>::infinity();
    while (dir * (t_end - t) > 0.0) {
        double h = dt;
        bool clipped = false;
        if (dir * (t + h - t_end) > 0.0) {
            h = t_end - t;
            clipped = true;
        }
        double t_try = t;
        const auto res = stepper.try_step(sys, x, t_try, h);
        if (res == ode::success) {
            // a clipped step lands on t_end exactly
            t = clipped ? t_end : t_try;
            ++r.steps;
            if (!clipped) dt = h;
            else if (std::abs(h) > std::abs(dt)) dt = h;
            if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || std::abs(x[0]) > radius || std::abs(x[1]) > radius) {
                r.escaped = true;
                r.t = t;
                return r;
            }
        } else {
            dt = h;
            if (std::abs(dt) < s.min_step) {
                r.escaped = true;
                r.t = t;
                return r;
            }
        }
    }
    r.t = t;
    return r;
}

struct Trajectory {
    std::vector<double> t, q, p;
    bool escaped = false;
    double escape_time = std::numeric_limits<double>::quiet_NaN();
};

/// Samples the orbit at t_begin + k * sample_dt (and t_end).
inline Trajectory integrate(PhasePoint ic, const ClassicalParams& cp, double t_begin, double t_end,
                            double sample_dt, IntegratorSettings s = {}) {
    if (!(sample_dt > 0.0)) throw InvalidParameter("integrate: sample_dt must be > 0");
    if (s.escape_radius == 0.0) s.escape_radius = default_escape_radius(cp);
    FlowSystem sys{cp};
    std::array<double, 2> x{ic.q, ic.p};
    Trajectory tr;
    tr.t.push_back(t_begin);
    tr.q.push_back(x[0]);
    tr.p.push_back(x[1]);
    const double dir = t_end >= t_begin ? 1.0 : -1.0;
    const long n = static_cast<long>(std::ceil(std::abs(t_end - t_begin) / sample_dt - 1e-12));
    double t = t_begin, dt = 0.0;
    for (long k = 1; k <= n; ++k) {
        const double target = k == n ? t_end : t_begin + dir * k * sample_dt;
        const AdvanceResult r = advance(sys, x, t, target, dt, s);
        if (r.escaped) {
            tr.escaped = true;
            tr.escape_time = r.t;
            return tr;
        }
        t = target;
        tr.t.push_back(t);
        tr.q.push_back(x[0]);
        tr.p.push_back(x[1]);
    }
    return tr;
}

}  // namespace kpo::classical
