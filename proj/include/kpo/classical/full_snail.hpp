#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "kpo/classical/dynamics.hpp"
#include "kpo/model/hamiltonian.hpp"
#include "kpo/model/snail.hpp"

namespace kpo::classical {

/// Classical flow of the unexpanded SNAIL-array potential in the dimensionless
/// (X, P) coordinates of the quartic model: phi = phi_bar + sqrt2 hbar X with
/// phi_bar = M phi_min.  The quartic model at hbar = 1 is the Taylor expansion
/// of this flow to fourth order in X.
class FullSnailFlow {
public:
    FullSnailFlow(const model::SnailParams& sp, double Omega_d, double omega_d,
                  double t0 = std::numeric_limits<double>::quiet_NaN())
        : sp_(sp), co_(model::snail_coefficients(sp)), Omega_d_(Omega_d), omega_d_(omega_d) {
        t0_ = std::isnan(t0) ? model::default_time_origin(omega_d) : t0;
        phi_bar_ = sp_.M * co_.phi_min;
        s_guess_ = co_.phi_min;
        u_bar_ = model::array_potential(sp_, phi_bar_, co_.phi_min);
    }

    const model::SnailCoefficients& coefficients() const { return co_; }

    /// Quartic-model parameters (quantum units, hbar = 1 classical map) with this drive.
    ClassicalParams quartic() const {
        model::OscillatorParams p = co_.oscillator;
        p.Omega_d = Omega_d_;
        p.omega_d = omega_d_;
        ClassicalParams c = model::classical_from_quantum(p, 1.0);
        c.t0 = t0_;
        return c;
    }

    double phase(double X) const { return phi_bar_ + std::numbers::sqrt2 * co_.hbar_eff * X; }

    /// E_J [U(phi_bar + sqrt2 hbar X) - U(phi_bar)].
    double potential(double X) const {
        const double phi = phase(X);
        const double s = track(phi);
        const double r = phi - sp_.M * s;
        const double v = sp_.M * model::snail_potential(sp_, s) + (std::isinf(sp_.xi_J) ? 0.0 : 0.5 * sp_.xi_J * r * r);
        return sp_.E_J * (v - u_bar_);
    }

    /// dV/dX, using the envelope theorem for the internal SNAIL phase.
    double force(double X) const {
        const double phi = phase(X);
        const double s = track(phi);
        return sp_.E_J * std::numbers::sqrt2 * co_.hbar_eff * model::array_force(sp_, phi, s);
    }

    std::array<double, 2> rhs(double t, double X, double P) const {
        return {co_.oscillator.omega0 * P + std::numbers::sqrt2 * Omega_d_ * std::cos(omega_d_ * (t + t0_)), -force(X)};
    }

    void operator()(const std::array<double, 2>& x, std::array<double, 2>& dx, double t) const {
        const auto f = rhs(t, x[0], x[1]);
        dx[0] = f[0];
        dx[1] = f[1];
    }

    double drive_period() const { return 2.0 * std::numbers::pi / omega_d_; }

private:
    // internal SNAIL phase, continued from the previous evaluation
    double track(double phi) const {
        if (std::isinf(sp_.xi_J)) return phi / sp_.M;
        s_guess_ = model::snail_phase_for(sp_, phi, s_guess_);
        return s_guess_;
    }

    model::SnailParams sp_;
    model::SnailCoefficients co_;
    double Omega_d_, omega_d_, t0_;
    double phi_bar_ = 0.0, u_bar_ = 0.0;
    mutable double s_guess_ = 0.0;
};

}  // namespace kpo::classical
