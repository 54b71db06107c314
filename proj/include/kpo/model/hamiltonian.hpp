#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "kpo/core/banded.hpp"
#include "kpo/core/error.hpp"
#include "kpo/core/roots.hpp"
#include "kpo/model/fock.hpp"
#include "kpo/model/params.hpp"

namespace kpo::model {

/// H0 = omega0 a^dag a + (g3/3) x^3 + (g4/4) x^4 with x = a + a^dag, all
/// products taken inside the truncated space. Real symmetric, half-width 4.
inline BandedMatrix static_hamiltonian_banded(const OscillatorParams& p, const FockSpace& space) {
    if (space.dim() < 4) throw TruncationError("static Hamiltonian needs N >= 4");
    const BandedMatrix x = space.x_banded();
    const BandedMatrix x2 = x * x;
    const BandedMatrix x3 = x2 * x;
    const BandedMatrix x4 = x2 * x2;
    BandedMatrix h = BandedMatrix::axpby(p.g3 / 3.0, x3, p.g4 / 4.0, x4);
    for (int n = 0; n < space.dim(); ++n) h.diag(0)[n] += p.omega0 * n;
    return h;
}

inline Eigen::MatrixXd build_static_hamiltonian(const OscillatorParams& p, const FockSpace& space) {
    return static_hamiltonian_banded(p, space).to_dense();
}

/// -i (a - a^dag): Hermitian, purely imaginary. The driven Hamiltonian is
/// H0 + Omega_d cos(omega_d t) * this.
inline Eigen::MatrixXcd build_drive_operator(const FockSpace& space) {
    const std::complex<double> I(0.0, 1.0);
    return I * space.w_banded().to_dense().cast<std::complex<double>>();
}

/// -3 g4 / 2 + 10 g3^2 / (3 omega0).
inline double second_order_kerr(const OscillatorParams& p) {
    return -1.5 * p.g4 + 10.0 * p.g3 * p.g3 / (3.0 * p.omega0);
}

struct KerrResult {
    double K = 0.0;        ///< (omega_10 - omega_21) / 2 from exact eigenvalues
    double K2 = 0.0;       ///< second-order effective value
    double delta_K = 0.0;  ///< |K - K2|
    int N = 0;             ///< truncation at which the levels were taken
    Eigen::Vector3d levels = Eigen::Vector3d::Zero();
};

namespace detail {
inline Eigen::Vector3d lowest_levels(const OscillatorParams& p, int N) {
    const Eigen::MatrixXd h = build_static_hamiltonian(p, FockSpace(N));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenError("static spectrum: eigensolver failed");
    return es.eigenvalues().head<3>();
}

inline bool levels_agree(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double scale) {
    for (int i = 0; i < 3; ++i)
        if (std::abs(a[i] - b[i]) > 1e-10 * std::max(std::abs(a[i]), scale)) return false;
    return true;
}
}  // namespace detail

/// Exact Kerr nonlinearity at the given truncation. The three lowest levels
/// must agree with those at 2N; otherwise a ConvergenceError names the
/// smallest power-of-two multiple of N that passes.
inline KerrResult kerr_nonlinearity(const OscillatorParams& p, const FockSpace& space) {
    p.validate();
    const int N = space.dim();
    const Eigen::Vector3d e = detail::lowest_levels(p, N);
    Eigen::Vector3d e2 = detail::lowest_levels(p, 2 * N);
    if (!detail::levels_agree(e, e2, p.omega0)) {
        int suggest = 2 * N;
        Eigen::Vector3d prev = e2;
        bool found = false;
        for (int tries = 0; tries < 4 && !found; ++tries) {
            const Eigen::Vector3d next = detail::lowest_levels(p, 2 * suggest);
            if (detail::levels_agree(prev, next, p.omega0)) found = true;
            else {
                suggest *= 2;
                prev = next;
            }
        }
        std::ostringstream os;
        os << "lowest static levels not converged at N = " << N;
        if (found) os << "; suggested N = " << suggest;
        else os << "; not converged up to N = " << 2 * suggest << " (check that the static well exists)";
        throw ConvergenceError(os.str());
    }
    KerrResult r;
    r.levels = e;
    r.N = N;
    r.K = 0.5 * ((e[1] - e[0]) - (e[2] - e[1]));
    r.K2 = second_order_kerr(p);
    r.delta_K = std::abs(r.K - r.K2);
    return r;
}

/// Doubles N from `N_start` until the lowest levels converge.
inline KerrResult kerr_nonlinearity_auto(const OscillatorParams& p, int N_start = 64, int N_max = 4096) {
    for (int N = N_start; N <= N_max; N *= 2) {
        try {
            return kerr_nonlinearity(p, FockSpace(N));
        } catch (const ConvergenceError&) {
            if (2 * N > N_max) throw;
        }
    }
    throw ConvergenceError("Kerr nonlinearity did not converge");
}

inline DerivedScales derived_scales(const OscillatorParams& p, double K) {
    p.validate();
    if (K == 0.0 || !std::isfinite(K))
        throw InvalidParameter("derived scales need K != 0: check g3/g4 (a vanishing nonlinearity gives K = 0)");
    if (p.omega_d == p.omega0) throw InvalidParameter("derived scales need omega_d != omega0 (Pi diverges)");
    DerivedScales s;
    s.K = K;
    s.K2 = second_order_kerr(p);
    s.eps2 = 2.0 * p.g3 * p.Omega_d / (3.0 * p.omega0);
    s.Pi = p.Omega_d * p.omega_d / (p.omega_d * p.omega_d - p.omega0 * p.omega0);
    s.Gamma = p.g3 * s.Pi / K;
    s.n_in = 2.0 * s.Gamma / std::numbers::pi;
    s.T_d = p.drive_period();
    if (p.has_double_well() && p.g4 != 0.0) {
        const double root = std::sqrt(p.g3 * p.g3 - 2.0 * p.g4 * p.omega0);
        s.d_minus = std::numbers::sqrt2 * (-p.g3 - root) / (4.0 * p.g4);
        s.d_plus = std::numbers::sqrt2 * (-p.g3 + root) / (4.0 * p.g4);
        s.inner_double_well = std::abs(s.center_offset()) + std::abs(std::sqrt(std::abs(2.0 * s.Gamma))) <
                              std::abs(s.d_plus);
    } else {
        s.d_minus = s.d_plus = std::numeric_limits<double>::quiet_NaN();
        s.inner_double_well = false;
    }
    return s;
}

/// Which Kerr value a target refers to when parameters are built from targets.
enum class KerrConvention {
    exact,         ///< K from exact eigenvalues of H0 (root-find on g3)
    second_order,  ///< K = K^(2) = C g4 (closed form)
};

/// g4 tied to g3 by K^(2) = C g4: g4 = 20 g3^2 / (3 (2C + 3) omega0).
inline double g4_for_family(double g3, double C, double omega0 = 1.0) {
    return 20.0 * g3 * g3 / (3.0 * (2.0 * C + 3.0) * omega0);
}

/// Builds parameters (omega0 = 1) whose Kerr value equals `K_over_w0` and whose
/// well parameter equals `Gamma`, with g4 on the K^(2) = C g4 family.
inline OscillatorParams params_from_targets(double K_over_w0, double Gamma, double C, double omega_d_over_w0,
                                            KerrConvention conv = KerrConvention::exact) {
    if (K_over_w0 == 0.0 || !std::isfinite(K_over_w0))
        throw InvalidParameter("target K must be nonzero and finite");
    if (!std::isfinite(Gamma)) throw InvalidParameter("target Gamma must be finite");
    if (!(omega_d_over_w0 > 0.0) || omega_d_over_w0 == 1.0)
        throw InvalidParameter("omega_d/omega0 must be positive and != 1");
    if (std::abs(2.0 * C + 3.0) < 1e-12) throw InvalidParameter("C = -3/2 makes g4 undefined");
    if (2.0 * C + 3.0 < 0.0) {
        std::ostringstream os;
        os << "C = " << C << " requires g4 < 0 (quartic potential unbounded below); rejected";
        throw RangeError(os.str());
    }
    // K^(2) = coef * g3^2
    const double coef = 20.0 * C / (3.0 * (2.0 * C + 3.0));
    if (coef == 0.0 || (coef > 0) != (K_over_w0 > 0)) {
        std::ostringstream os;
        os << "target K = " << K_over_w0 << " has the wrong sign for C = " << C;
        throw RangeError(os.str());
    }

    OscillatorParams p;
    p.omega0 = 1.0;
    p.omega_d = omega_d_over_w0;
    const double g3_guess = std::sqrt(K_over_w0 / coef);

    if (conv == KerrConvention::second_order) {
        p.g3 = g3_guess;
    } else {
        auto with_g3 = [&](double g3) {
            OscillatorParams q = p;
            q.g3 = g3;
            q.g4 = g4_for_family(g3, C);
            return q;
        };
        auto mismatch = [&](double g3) { return kerr_nonlinearity_auto(with_g3(g3)).K - K_over_w0; };
        // Away from the perturbative branch the exact K is not monotonic in g3
        // (once the outer well dips below the origin the lowest levels change
        // character), so grow the bracket outward from the K^(2) guess in small
        // steps and take the nearest sign change.
        const double f0 = mismatch(g3_guess);
        double lo = g3_guess, hi = g3_guess, flo = f0, fhi = f0;
        bool found = false;
        for (int i = 0; i < 40; ++i) {
            const double up = hi * 1.05, down = lo / 1.05;
            const double fup = mismatch(up);
            if ((fup > 0) != (fhi > 0)) {
                lo = hi;
                hi = up;
                found = true;
                break;
            }
            hi = up;
            fhi = fup;
            const double fdown = mismatch(down);
            if ((fdown > 0) != (flo > 0)) {
                hi = lo;
                lo = down;
                found = true;
                break;
            }
            lo = down;
            flo = fdown;
        }
        if (!found) {
            std::ostringstream os;
            os << "target K = " << K_over_w0 << " is not reachable on the C = " << C << " family";
            throw RangeError(os.str());
        }
        p.g3 = find_root(mismatch, lo, hi);
    }
    p.g4 = g4_for_family(p.g3, C);
    const double Pi = Gamma * K_over_w0 / p.g3;
    p.Omega_d = Pi * (p.omega_d * p.omega_d - 1.0) / p.omega_d;
    return p;
}

/// Quantum -> classical coefficient map: omega0/h, g3/h^(3/2), g4/h^2, Omega_d/sqrt(h).
/// The drive frequency is unchanged and the drive phase origin defaults to T_d/4.
inline ClassicalParams classical_from_quantum(const OscillatorParams& p, double hbar_eff) {
    if (!(hbar_eff > 0.0)) throw InvalidParameter("hbar_eff must be > 0");
    ClassicalParams c;
    c.omega0 = p.omega0 / hbar_eff;
    c.g3 = p.g3 / std::pow(hbar_eff, 1.5);
    c.g4 = p.g4 / (hbar_eff * hbar_eff);
    c.Omega_d = p.Omega_d / std::sqrt(hbar_eff);
    c.omega_d = p.omega_d;
    c.t0 = default_time_origin(p.omega_d);
    return c;
}

inline ClassicalParams classical_from_quantum(const OscillatorParams& p) {
    return classical_from_quantum(p, p.hbar_eff);
}

/// Inverse of classical_from_quantum.
inline OscillatorParams quantum_from_classical(const ClassicalParams& c, double hbar_eff) {
    if (!(hbar_eff > 0.0)) throw InvalidParameter("hbar_eff must be > 0");
    OscillatorParams p;
    p.omega0 = c.omega0 * hbar_eff;
    p.g3 = c.g3 * std::pow(hbar_eff, 1.5);
    p.g4 = c.g4 * hbar_eff * hbar_eff;
    p.Omega_d = c.Omega_d * std::sqrt(hbar_eff);
    p.omega_d = c.omega_d;
    p.hbar_eff = hbar_eff;
    return p;
}

}  // namespace kpo::model
