#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "kpo/model/params.hpp"

namespace kpo::classical {

using model::ClassicalParams;

struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

/// Static part h0 = omega0 (q^2 + p^2)/2 + (2 sqrt2/3) g3 q^3 + g4 q^4.
inline double h0(double q, double p, const ClassicalParams& cp) {
    return 0.5 * cp.omega0 * (q * q + p * p) + 2.0 * std::numbers::sqrt2 / 3.0 * cp.g3 * q * q * q +
           cp.g4 * q * q * q * q;
}

inline double drive_factor(double t, const ClassicalParams& cp) {
    return std::cos(cp.omega_d * (t + cp.t0));
}

/// h_cl = h0 + sqrt2 Omega_d p cos(omega_d (t + t0)).
inline double h_cl(double t, double q, double p, const ClassicalParams& cp) {
    return h0(q, p, cp) + std::numbers::sqrt2 * cp.Omega_d * p * drive_factor(t, cp);
}

/// dV/dq of the static potential.
inline double potential_slope(double q, const ClassicalParams& cp) {
    return cp.omega0 * q + 2.0 * std::numbers::sqrt2 * cp.g3 * q * q + 4.0 * cp.g4 * q * q * q;
}

inline double potential_curvature(double q, const ClassicalParams& cp) {
    return cp.omega0 + 4.0 * std::numbers::sqrt2 * cp.g3 * q + 12.0 * cp.g4 * q * q;
}

/// (dq/dt, dp/dt) of Hamilton's equations for h_cl.
inline std::array<double, 2> hamilton_rhs(double t, double q, double p, const ClassicalParams& cp) {
    return {cp.omega0 * p + std::numbers::sqrt2 * cp.Omega_d * drive_factor(t, cp), -potential_slope(q, cp)};
}

/// Flow plus its linearization: state (q, p, dq, dp).
struct TangentSystem {
    ClassicalParams cp;
    void operator()(const std::array<double, 4>& x, std::array<double, 4>& dx, double t) const {
        const auto f = hamilton_rhs(t, x[0], x[1], cp);
        dx[0] = f[0];
        dx[1] = f[1];
        dx[2] = cp.omega0 * x[3];
        dx[3] = -potential_curvature(x[0], cp) * x[2];
    }
};

struct FlowSystem {
    ClassicalParams cp;
    void operator()(const std::array<double, 2>& x, std::array<double, 2>& dx, double t) const {
        const auto f = hamilton_rhs(t, x[0], x[1], cp);
        dx[0] = f[0];
        dx[1] = f[1];
    }
};

}  // namespace kpo::classical
