#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "kpo/core/error.hpp"
#include "kpo/core/roots.hpp"
#include "kpo/model/params.hpp"

namespace kpo::model {

/// Single-SNAIL inductive energy per E_J: -alpha cos(phi) - m cos((phi_ext - phi)/m).
inline double snail_potential(const SnailParams& sp, double phi) {
    return -sp.alpha * std::cos(phi) - sp.m * std::cos((sp.phi_ext - phi) / sp.m);
}

/// n-th derivative (n = 0..4) of snail_potential.
inline double snail_derivative(const SnailParams& sp, double phi, int n) {
    const double a = sp.alpha;
    const double m = sp.m;
    const double s = (sp.phi_ext - phi) / m;
    switch (n) {
        case 0: return -a * std::cos(phi) - m * std::cos(s);
        case 1: return a * std::sin(phi) - std::sin(s);
        case 2: return a * std::cos(phi) + std::cos(s) / m;
        case 3: return -a * std::sin(phi) + std::sin(s) / (m * m);
        case 4: return -a * std::cos(phi) - std::cos(s) / (m * m * m);
        default: throw InvalidParameter("snail_derivative: order must be 0..4");
    }
}

struct SnailCoefficients {
    double phi_min = 0.0;                ///< single-SNAIL phase at the minimum
    std::array<double, 5> c{};           ///< c0..c4 at phi_min
    std::array<double, 5> cbar{};        ///< array coefficients; cbar[0], cbar[1] unused (zero)
    double p = 1.0;                      ///< M xi_J / (c2 + M xi_J)
    double hbar_eff = 1.0;
    OscillatorParams oscillator;         ///< omega0, g3, g4, hbar_eff from the expansion
};

/// Solves c1(phi_min) = 0 on (-pi, pi], keeping the stable root with the lowest
/// energy, then forms the array coefficients and the quartic-model mapping.
inline SnailCoefficients snail_coefficients(const SnailParams& sp) {
    sp.validate();
    auto c1 = [&](double phi) { return snail_derivative(sp, phi, 1); };

    constexpr int kScan = 2048;
    const double pi = std::numbers::pi;
    double best_phi = std::numeric_limits<double>::quiet_NaN();
    double best_u = std::numeric_limits<double>::infinity();
    bool any_root = false;
    double prev_x = -pi;
    double prev_f = c1(prev_x);
    for (int i = 1; i <= kScan; ++i) {
        const double x = -pi + 2.0 * pi * i / kScan;
        const double f = c1(x);
        double root = std::numeric_limits<double>::quiet_NaN();
        if (f == 0.0) root = x;
        else if ((f > 0) != (prev_f > 0) && prev_f != 0.0) root = find_root(c1, prev_x, x);
        if (std::isfinite(root)) {
            any_root = true;
            if (snail_derivative(sp, root, 2) > 0.0 && snail_potential(sp, root) < best_u) {
                best_u = snail_potential(sp, root);
                best_phi = root;
            }
        }
        prev_x = x;
        prev_f = f;
    }
    if (!any_root) throw FluxConfigurationError("no stationary point of the SNAIL potential in (-pi, pi]");
    if (!std::isfinite(best_phi)) {
        std::ostringstream os;
        os << "SNAIL potential has no stable minimum (c2 <= 0 at every stationary point) for phi_ext = " << sp.phi_ext;
        throw StabilityError(os.str());
    }

    SnailCoefficients out;
    out.phi_min = best_phi;
    for (int n = 0; n < 5; ++n) out.c[n] = snail_derivative(sp, best_phi, n);
    const double c2 = out.c[2], c3 = out.c[3], c4 = out.c[4];
    const double M = sp.M;
    out.p = std::isinf(sp.xi_J) ? 1.0 : M * sp.xi_J / (c2 + M * sp.xi_J);
    const double p = out.p;
    out.cbar[2] = p / M * c2;
    out.cbar[3] = p * p * p / (M * M) * c3;
    out.cbar[4] = std::pow(p, 4) / (M * M * M) * (c4 - 3.0 * c3 * c3 / c2 * (1.0 - p));
    if (!(out.cbar[2] > 0.0)) throw StabilityError("array coefficient cbar2 <= 0");

    out.hbar_eff = std::pow(2.0 * sp.E_C / (out.cbar[2] * sp.E_J), 0.25);
    const double h = out.hbar_eff;
    OscillatorParams& o = out.oscillator;
    o.omega0 = 2.0 * h * h * out.cbar[2] * sp.E_J;
    o.g3 = std::pow(h, 3) * out.cbar[3] * sp.E_J / 2.0;
    o.g4 = std::pow(h, 4) * out.cbar[4] * sp.E_J / 6.0;
    o.hbar_eff = h;
    o.omega_d = 2.0 * o.omega0;
    o.Omega_d = 0.0;
    return out;
}

/// Phase of each SNAIL for total array phase `phi`: root of
/// alpha sin(s) - sin((phi_ext - s)/m) + xi_J (M s - phi) = 0, by guarded
/// Newton from `guess` with a bisection fallback.
inline double snail_phase_for(const SnailParams& sp, double phi, double guess, double tol = 1e-12) {
    if (std::isinf(sp.xi_J)) return phi / sp.M;
    const double M = sp.M;
    auto f = [&](double s) { return snail_derivative(sp, s, 1) + sp.xi_J * (M * s - phi); };
    auto df = [&](double s) { return snail_derivative(sp, s, 2) + sp.xi_J * M; };
    double s = guess;
    for (int it = 0; it < 50; ++it) {
        const double fs = f(s);
        const double d = df(s);
        if (!(d > 0.0)) break;
        const double step = fs / d;
        s -= step;
        if (std::abs(step) < tol) return s;
    }
    // f is increasing wherever u'' + M xi_J > 0; bracket by the bounded sine terms.
    const double span = (sp.alpha + 1.0) / (sp.xi_J * M) + 1e-9;
    double lo = phi / M - span, hi = phi / M + span;
    if ((f(lo) > 0) == (f(hi) > 0)) {
        std::ostringstream os;
        os << "SNAIL phase not bracketed for phi = " << phi << " (guess " << guess << ")";
        throw RootTrackingError(os.str());
    }
    return find_root(f, lo, hi, RootOptions{tol, 400});
}

/// Array potential per E_J: M u(s) + (xi_J / 2)(phi - M s)^2 with s = s[phi].
/// For xi_J = inf this is M u(phi / M).
inline double array_potential(const SnailParams& sp, double phi, double guess) {
    if (std::isinf(sp.xi_J)) return sp.M * snail_potential(sp, phi / sp.M);
    const double s = snail_phase_for(sp, phi, guess);
    const double r = phi - sp.M * s;
    return sp.M * snail_potential(sp, s) + 0.5 * sp.xi_J * r * r;
}

/// d/dphi of array_potential, by the envelope theorem xi_J (phi - M s[phi]).
inline double array_force(const SnailParams& sp, double phi, double s) {
    if (std::isinf(sp.xi_J)) return snail_derivative(sp, phi / sp.M, 1);
    return sp.xi_J * (phi - sp.M * s);
}

}  // namespace kpo::model
