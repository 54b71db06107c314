#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kpo/classical/critical.hpp"
#include "kpo/classical/lyapunov.hpp"
#include "kpo/floquet/propagator.hpp"
#include "kpo/floquet/spacing.hpp"
#include "kpo/model/hamiltonian.hpp"
#include "kpo/qphase/coherent.hpp"
#include "kpo/qphase/husimi.hpp"

namespace kpo::cli {

struct InvariantCheck {
    std::string name;
    double value = 0.0;      ///< measured defect
    double tolerance = 0.0;  ///< pass when value <= tolerance
    bool pass = false;
    std::string message;     ///< set when the check itself threw
};

/// Runs the module invariants on small fixed problems (point A of the C = 10
/// family and a few textbook cases). Tolerances are multiplied by `scale`.
inline std::vector<InvariantCheck> run_invariants(double scale = 1.0) {
    using namespace kpo;
    const model::OscillatorParams pA = model::params_from_targets(0.53e-4, 8.5, 10.0, 1.999866);
    const model::ClassicalParams cA = model::classical_from_quantum(pA, 1.0);

    std::vector<InvariantCheck> out;
    auto check = [&](const std::string& name, double tol, const std::function<double()>& f) {
        InvariantCheck c;
        c.name = name;
        c.tolerance = tol * scale;
        try {
            c.value = f();
            c.pass = std::isfinite(c.value) && c.value <= c.tolerance;
        } catch (const std::exception& e) {
            c.value = std::nan("");
            c.message = e.what();
        }
        out.push_back(std::move(c));
    };

    check("static_hamiltonian_hermitian", 1e-12, [&] {
        const Eigen::MatrixXd H = model::build_static_hamiltonian(pA, model::FockSpace(40));
        return (H - H.transpose()).cwiseAbs().maxCoeff() / H.cwiseAbs().maxCoeff();
    });
    check("drive_operator_hermitian", 1e-12, [&] {
        const Eigen::MatrixXcd D = model::build_drive_operator(model::FockSpace(40));
        return (D - D.adjoint()).cwiseAbs().maxCoeff();
    });
    check("ladder_commutator", 1e-12, [&] {
        const model::FockSpace s(20);
        const Eigen::MatrixXd c = s.a() * s.adag() - s.adag() * s.a();
        return (c.topLeftCorner(19, 19) - Eigen::MatrixXd::Identity(19, 19)).cwiseAbs().maxCoeff();
    });
    // K is a second difference of O(omega0) eigenvalues, so compare in units of omega0
    check("kerr_truncation_invariance", 1e-12, [&] {
        const double k1 = model::kerr_nonlinearity(pA, model::FockSpace(128)).K;
        const double k2 = model::kerr_nonlinearity(pA, model::FockSpace(256)).K;
        return std::abs(k1 - k2) / pA.omega0;
    });
    check("family_g4", 1e-14, [&] { return std::abs(pA.g4 / (20.0 * pA.g3 * pA.g3 / 69.0) - 1.0); });
    check("gamma_K_identity", 1e-12, [&] {
        const model::DerivedScales s = model::derived_scales(pA, model::kerr_nonlinearity_auto(pA).K);
        const double rhs = pA.g3 * pA.Omega_d * pA.omega_d / (pA.omega0 * (pA.omega_d * pA.omega_d - 1.0));
        return std::abs(s.Gamma * s.K - rhs) / std::abs(rhs);
    });
    check("critical_points_stationary", 1e-10, [&] {
        double worst = 0.0;
        for (const auto& c : classical::critical_points(cA).points)
            worst = std::max(worst, std::abs(classical::potential_slope(c.point.q, cA)));
        return worst;
    });
    check("floquet_unitarity", 1e-9, [&] {
        return floquet::max_unitarity_defect(floquet::propagate_one_period(pA, model::FockSpace(68)));
    });
    check("tangent_map_symplectic", 1e-6, [&] {
        const double q = std::numbers::sqrt2 * pA.Omega_d * pA.omega_d / (pA.omega_d * pA.omega_d - 1.0) +
                         std::sqrt(17.0);
        const auto m = classical::period_tangent_map({q, 0.3}, cA);
        return std::abs(m[0] * m[3] - m[1] * m[2] - 1.0);
    });
    check("undriven_energy_drift", 1e-8, [&] {
        model::ClassicalParams c = cA;
        c.Omega_d = 0.0;
        const classical::PhasePoint ic{2.0, 1.0};
        const auto tr = classical::integrate(ic, c, 0.0, 100 * c.drive_period(), c.drive_period());
        const double e0 = classical::h0(ic.q, ic.p, c);
        return std::abs(classical::h0(tr.q.back(), tr.p.back(), c) - e0) / std::abs(e0);
    });
    check("husimi_normalization", 1e-2, [&] {
        const Eigen::VectorXcd psi = qphase::coherent_amplitudes({1.0, -0.5}, 40);
        const qphase::PhaseGrid g{-9, 11, -10, 10, 161, 161};
        return std::abs(qphase::husimi(psi, g).field.integral() - 1.0);
    });
    check("coherent_wehrl_entropy", 5e-3, [&] {
        const Eigen::VectorXcd psi = qphase::coherent_amplitudes({0.7, 0.2}, 40);
        const qphase::PhaseGrid g{-9, 11, -9, 9, 201, 201};
        const double s = qphase::wehrl_entropy(psi, g);
        return std::abs(s / ((1.0 + std::log(std::numbers::pi)) / std::numbers::pi) - 1.0);
    });
    check("harmonic_lyapunov_times_horizon", 5.0, [&] {
        model::ClassicalParams h;
        h.omega0 = 1.0;
        h.omega_d = 1.999866;
        const classical::LyapunovResult r = classical::lyapunov({1.0, 0.0}, h);
        return r.lambda * 1000.0 * h.drive_period();
    });
    check("picket_fence_ratio", 1e-12, [&] {
        std::vector<double> v(200);
        for (int k = 0; k < 200; ++k) v[k] = 0.1 + 2.0 * std::numbers::pi * k / 200.0;
        return std::abs(floquet::spacing_ratio_on_circle(v, 2.0 * std::numbers::pi).r_tilde - 1.0);
    });
    return out;
}

}  // namespace kpo::cli
