#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kpo/core/error.hpp"

namespace kpo::model {

/// Physical parameters of the driven oscillator, all frequencies in units of
/// a common base (the library works with omega0 = 1 throughout).
struct OscillatorParams {
    double omega0 = 1.0;
    double g3 = 0.0;
    double g4 = 0.0;
    double omega_d = 2.0;
    double Omega_d = 0.0;
    double hbar_eff = 1.0;

    double drive_period() const { return 2.0 * std::numbers::pi / omega_d; }

    /// g3^2 - 2 g4 omega0 > 0: the static potential has real critical points d+-.
    bool has_double_well() const { return g3 * g3 - 2.0 * g4 * omega0 > 0.0; }

    /// Throws InvalidParameter listing every violated hard invariant.
    void validate() const {
        std::vector<std::string> bad;
        if (!(omega0 > 0.0)) bad.emplace_back("omega0 must be > 0");
        if (!(omega_d > 0.0)) bad.emplace_back("omega_d must be > 0");
        if (!(hbar_eff > 0.0)) bad.emplace_back("hbar_eff must be > 0");
        if (!std::isfinite(g3) || !std::isfinite(g4) || !std::isfinite(Omega_d))
            bad.emplace_back("g3, g4 and Omega_d must be finite");
        if (bad.empty()) return;
        std::ostringstream os;
        os << "invalid oscillator parameters:";
        for (const auto& b : bad) os << ' ' << b << ';';
        throw InvalidParameter(os.str());
    }

    /// Soft conditions: reported, never thrown.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (omega0 > 0.0 && std::abs(g3) / omega0 > 0.1)
            w.emplace_back("g3/omega0 > 0.1: weak-nonlinearity assumption is stretched");
        if (!has_double_well())
            w.emplace_back("g3^2 - 2 g4 omega0 <= 0: static critical points d+- are complex");
        return w;
    }
};

/// Coefficients of the classical Hamiltonian after the hbar_eff rescaling.
struct ClassicalParams {
    double omega0 = 1.0;
    double g3 = 0.0;
    double g4 = 0.0;
    double omega_d = 2.0;
    double Omega_d = 0.0;
    /// Drive is cos(omega_d (t + t0)). Stroboscopic samples are taken at t = k T_d.
    double t0 = 0.0;

    double drive_period() const { return 2.0 * std::numbers::pi / omega_d; }
    bool has_double_well() const { return g3 * g3 - 2.0 * g4 * omega0 > 0.0; }
};

/// Scales derived from the oscillator parameters and a Kerr value.
struct DerivedScales {
    double K = 0.0;        ///< Kerr nonlinearity used for Gamma (exact unless stated otherwise)
    double K2 = 0.0;       ///< second-order effective Kerr, -3 g4/2 + 10 g3^2/(3 omega0)
    double eps2 = 0.0;     ///< squeezing amplitude 2 g3 Omega_d / (3 omega0)
    double Pi = 0.0;       ///< lemniscate-centre displacement parameter
    double Gamma = 0.0;    ///< well-depth parameter g3 Pi / K
    double n_in = 0.0;     ///< semiclassical level count 2 Gamma / pi
    double d_minus = 0.0;  ///< static minimum abscissa (NaN without a double well)
    double d_plus = 0.0;   ///< static saddle abscissa (NaN without a double well)
    double T_d = 0.0;
    bool inner_double_well = false;  ///< |sqrt2 Pi| + |sqrt(2 Gamma)| < |d_plus|

    double focal_distance() const { return std::sqrt(2.0 * Gamma); }
    double center_offset() const { return std::sqrt(2.0) * Pi; }
    double gamma_K() const { return Gamma * K; }
};

/// Circuit parameters of a SNAIL array.
struct SnailParams {
    double alpha = 0.1;   ///< small-junction energy ratio
    int m = 3;            ///< number of large junctions
    double phi_ext = 0.0; ///< reduced external flux (rad)
    int M = 1;            ///< SNAILs in the array
    double E_C = 1.0;     ///< charging energy
    double E_J = 1.0;     ///< Josephson energy of a large junction
    /// L_J / L. Infinity means no series linear inductance (p = 1).
    double xi_J = std::numeric_limits<double>::infinity();

    void validate() const {
        std::vector<std::string> bad;
        if (m < 1) bad.emplace_back("m must be >= 1");
        if (M < 1) bad.emplace_back("M must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) bad.emplace_back("alpha must lie in (0, 1)");
        if (!(E_C > 0.0)) bad.emplace_back("E_C must be > 0");
        if (!(E_J > 0.0)) bad.emplace_back("E_J must be > 0");
        if (!(xi_J > 0.0)) bad.emplace_back("xi_J must be > 0");
        if (bad.empty()) return;
        std::ostringstream os;
        os << "invalid SNAIL parameters:";
        for (const auto& b : bad) os << ' ' << b << ';';
        throw InvalidParameter(os.str());
    }
};

}  // namespace kpo::model

namespace kpo::model {

/// Drive-phase origin used for Floquet states and stroboscopic sections.
/// At t0 = T_d/4 the cat-state wells lie on the q axis and the lemniscate
/// centre sits at (sqrt2 Pi, 0).
inline double default_time_origin(double omega_d) { return 0.5 * std::numbers::pi / omega_d; }

}  // namespace kpo::model
