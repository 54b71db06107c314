#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "kpo/core/band_eigen.hpp"
#include "kpo/core/banded.hpp"
#include "kpo/core/error.hpp"
#include "kpo/core/parallel.hpp"
#include "kpo/model/fock.hpp"
#include "kpo/model/hamiltonian.hpp"
#include "kpo/model/params.hpp"

namespace kpo::floquet {

enum class MagnusOrder { second = 2, fourth = 4 };

struct PropagatorOptions {
    int steps = 512;
    MagnusOrder order = MagnusOrder::fourth;
    /// Drive is cos(omega_d (t + t0)); NaN selects model::default_time_origin.
    double t0 = std::numeric_limits<double>::quiet_NaN();
    int workers = 1;
    /// Chebyshev series is cut once |J_k| drops below this (relative to 1).
    double series_tol = 1e-16;
    /// Accept U when max |U^dag U - I| stays below this.
    double unitarity_tol = 1e-9;
};

struct PropagatorReport {
    int steps_used = 0;
    double unitarity_defect = 0.0;
    long long matvecs = 0;  ///< banded panel products summed over panels
};

inline double max_unitarity_defect(const Eigen::MatrixXcd& U) {
    Eigen::MatrixXcd G = U.adjoint() * U;
    G.diagonal().array() -= 1.0;
    return G.cwiseAbs().maxCoeff();
}

namespace detail {

constexpr int kPanel = 8;
/// Half-width of the step generator: H0 has 4, [H0, W] has 5.
constexpr int kBand = 5;

/// exp(-i Theta) for Theta = S + i gamma W, stored shifted and scaled so that
/// the Chebyshev argument (Theta - c)/rho has spectrum in [-1, 1].
struct StepOperator {
    int n = 0;
    int w = 0;
    std::vector<double> s;       ///< row-major (2w+1) entries per row, already (S - c)/rho
    std::vector<double> w_lo;    ///< gamma/rho * W(i, i-1)
    std::vector<double> w_hi;    ///< gamma/rho * W(i, i+1)
    std::vector<std::complex<double>> coef;  ///< Chebyshev coefficients including exp(-i c)
};

// One row of a panel as a single SIMD value (GCC vector extension; unaligned).
typedef double PanelRow __attribute__((vector_size(kPanel * sizeof(double)), aligned(sizeof(double))));

/// dst = 2 * A * x - dst (first = false) or dst = A * x (first = true), then
/// acc += coef * dst. Row-major panels of width kPanel.
template <bool Interior>
inline void cheb_row(const StepOperator& op, int i, const PanelRow* __restrict xr, const PanelRow* __restrict xi,
                     PanelRow* __restrict zr, PanelRow* __restrict zi, PanelRow* __restrict ar,
                     PanelRow* __restrict ai, double cr, double ci, double two, double keep) {
    const int n = op.n;
    const int w = op.w;
    const double* srow = op.s.data() + static_cast<std::size_t>(i) * (2 * w + 1) + w;
    PanelRow yr, yi;
    if constexpr (Interior) {
        // fixed band of half-width kBand; two accumulator chains hide FMA latency
        PanelRow r0 = {}, r1 = {}, i0 = {}, i1 = {};
        for (int d = -kBand; d < kBand; d += 2) {
            r0 += srow[d] * xr[i + d];
            i0 += srow[d] * xi[i + d];
            r1 += srow[d + 1] * xr[i + d + 1];
            i1 += srow[d + 1] * xi[i + d + 1];
        }
        yr = r0 + r1 + srow[kBand] * xr[i + kBand];
        yi = i0 + i1 + srow[kBand] * xi[i + kBand];
    } else {
        yr = PanelRow{};
        yi = PanelRow{};
        const int dlo = std::max(-w, -i);
        const int dhi = std::min(w, n - 1 - i);
        for (int d = dlo; d <= dhi; ++d) {
            yr += srow[d] * xr[i + d];
            yi += srow[d] * xi[i + d];
        }
    }
    // (i gamma W) x: real part -gamma W xi, imaginary part +gamma W xr
    if (Interior || i > 0) {
        yr -= op.w_lo[i] * xi[i - 1];
        yi += op.w_lo[i] * xr[i - 1];
    }
    if (Interior || i + 1 < n) {
        yr -= op.w_hi[i] * xi[i + 1];
        yi += op.w_hi[i] * xr[i + 1];
    }
    const PanelRow vr = two * yr + keep * zr[i];
    const PanelRow vi = two * yi + keep * zi[i];
    zr[i] = vr;
    zi[i] = vi;
    ar[i] += cr * vr - ci * vi;
    ai[i] += cr * vi + ci * vr;
}

inline void cheb_update(const StepOperator& op, const double* xr, const double* xi, double* zr, double* zi,
                        double* ar, double* ai, std::complex<double> coef, bool first) {
    const int n = op.n;
    const int w = op.w;
    const double two = first ? 1.0 : 2.0;
    const double keep = first ? 0.0 : -1.0;
    const double cr = coef.real(), ci = coef.imag();
    const int head = std::min(w, n);
    const int tail = std::max(head, n - w);
    auto* Xr = reinterpret_cast<const PanelRow*>(xr);
    auto* Xi = reinterpret_cast<const PanelRow*>(xi);
    auto* Zr = reinterpret_cast<PanelRow*>(zr);
    auto* Zi = reinterpret_cast<PanelRow*>(zi);
    auto* Ar = reinterpret_cast<PanelRow*>(ar);
    auto* Ai = reinterpret_cast<PanelRow*>(ai);
    for (int i = 0; i < head; ++i) cheb_row<false>(op, i, Xr, Xi, Zr, Zi, Ar, Ai, cr, ci, two, keep);
    for (int i = head; i < tail; ++i) cheb_row<true>(op, i, Xr, Xi, Zr, Zi, Ar, Ai, cr, ci, two, keep);
    for (int i = tail; i < n; ++i) cheb_row<false>(op, i, Xr, Xi, Zr, Zi, Ar, Ai, cr, ci, two, keep);
}

/// Applies the step exponential to one panel in place; returns matvec count.
inline int apply_step(const StepOperator& op, std::vector<double>& pr, std::vector<double>& pi,
                      std::vector<double>* scratch) {
    const std::size_t len = pr.size();
    std::vector<double>& t1r = scratch[0];
    std::vector<double>& t1i = scratch[1];
    std::vector<double>& ar = scratch[2];
    std::vector<double>& ai = scratch[3];
    for (auto* v : {&t1r, &t1i, &ar, &ai}) v->resize(len);

    // acc = c0 * x
    const double c0r = op.coef[0].real(), c0i = op.coef[0].imag();
    for (std::size_t k = 0; k < len; ++k) {
        ar[k] = c0r * pr[k] - c0i * pi[k];
        ai[k] = c0r * pi[k] + c0i * pr[k];
    }
    // T0 = x lives in (pr, pi); T1 into t1
    cheb_update(op, pr.data(), pi.data(), t1r.data(), t1i.data(), ar.data(), ai.data(), op.coef[1], true);
    // T0 = x is no longer needed once it has served as "prev"
    double* prev_r = pr.data();
    double* prev_i = pi.data();
    double* cur_r = t1r.data();
    double* cur_i = t1i.data();
    const int K = static_cast<int>(op.coef.size());
    for (int k = 2; k < K; ++k) {
        // prev <- 2 A cur - prev, which is T_k
        cheb_update(op, cur_r, cur_i, prev_r, prev_i, ar.data(), ai.data(), op.coef[k], false);
        std::swap(prev_r, cur_r);
        std::swap(prev_i, cur_i);
    }
    pr.swap(ar);
    pi.swap(ai);
    return K - 1;
}

/// Chebyshev coefficients of exp(-i rho y) on y in [-1, 1] times exp(-i c).
inline std::vector<std::complex<double>> chebyshev_coefficients(double c, double rho, double tol) {
    std::vector<std::complex<double>> a;
    const std::complex<double> phase = std::polar(1.0, -c);
    const std::complex<double> minus_i(0.0, -1.0);
    std::complex<double> ipow(1.0, 0.0);
    for (int k = 0;; ++k) {
        const double j = std::cyl_bessel_j(static_cast<double>(k), rho);
        a.push_back((k == 0 ? 1.0 : 2.0) * j * ipow * phase);
        ipow *= minus_i;
        if (k >= 1 && k > rho && std::abs(j) < tol) break;
        if (k > 100000) throw ConvergenceError("Chebyshev series did not terminate");
    }
    if (a.size() < 2) a.emplace_back(0.0, 0.0);
    return a;
}

}  // namespace detail

/// One-period propagator of H(t) = H0 + Omega_d cos(omega_d (t + t0)) (-i)(a - a^dag).
///
/// Each of the `steps` slices uses a single exponential of the Magnus
/// generator: order 4 evaluates the drive at the two Gauss nodes and adds the
/// commutator term h^2 sqrt3/12 (f1 - f2) [H0, W]; order 2 is the midpoint rule.
/// The exponential acts on panels of identity columns through a Chebyshev
/// expansion whose interval comes from the exact H0 spectrum widened by a
/// Gershgorin bound on the remaining terms.
inline Eigen::MatrixXcd propagate_fixed(const model::OscillatorParams& p, const model::FockSpace& space,
                                        const PropagatorOptions& opt, PropagatorReport* report = nullptr) {
    const int N = space.dim();
    const int steps = opt.steps;
    const double T = p.drive_period();
    const double h = T / steps;
    const double t0 = std::isnan(opt.t0) ? model::default_time_origin(p.omega_d) : opt.t0;

    const BandedMatrix H0 = model::static_hamiltonian_banded(p, space);
    const BandedMatrix W = space.w_banded();
    const BandedMatrix Cr = H0 * W - W * H0;  // [H0, W], real symmetric
    const Eigen::VectorXd e0 = banded_symmetric_eigenvalues(H0);
    const double emin = e0[0], emax = e0[N - 1];

    const int w = detail::kBand;
    const int wc = Cr.half_width();
    const int wh = H0.half_width();
    const int width = 2 * w + 1;
    auto drive = [&](double t) { return p.Omega_d * std::cos(p.omega_d * (t + t0)); };

    const int panels = (N + detail::kPanel - 1) / detail::kPanel;
    std::vector<std::vector<double>> re(panels), im(panels);
    for (int b = 0; b < panels; ++b) {
        re[b].assign(static_cast<std::size_t>(N) * detail::kPanel, 0.0);
        im[b].assign(static_cast<std::size_t>(N) * detail::kPanel, 0.0);
        for (int c = 0; c < detail::kPanel; ++c) {
            const int col = b * detail::kPanel + c;
            if (col < N) re[b][static_cast<std::size_t>(col) * detail::kPanel + c] = 1.0;
        }
    }
    const int workers = std::max(1, opt.workers);
    std::vector<std::vector<std::vector<double>>> scratch(workers, std::vector<std::vector<double>>(4));
    long long matvecs = 0;

    detail::StepOperator op;
    op.n = N;
    op.w = w;
    op.s.assign(static_cast<std::size_t>(N) * width, 0.0);
    op.w_lo.assign(N, 0.0);
    op.w_hi.assign(N, 0.0);

    const double gauss = std::sqrt(3.0) / 6.0;
    for (int step = 0; step < steps; ++step) {
        const double tn = step * h;
        double beta = 0.0, gamma = 0.0;
        if (opt.order == MagnusOrder::fourth) {
            const double f1 = drive(tn + (0.5 - gauss) * h);
            const double f2 = drive(tn + (0.5 + gauss) * h);
            beta = std::sqrt(3.0) / 12.0 * h * h * (f1 - f2);
            gamma = 0.5 * h * (f1 + f2);
        } else {
            gamma = h * drive(tn + 0.5 * h);
        }
        // Gershgorin radius of beta [H0,W] + i gamma W bounds its spectral norm.
        double pert = 0.0;
        for (int i = 0; i < N; ++i) {
            double row = 0.0;
            for (int d = std::max(-wc, -i); d <= std::min(wc, N - 1 - i); ++d) {
                const double wr = (d == 1 || d == -1) ? gamma * W.diag(d)[i] : 0.0;
                row += std::hypot(beta * Cr.diag(d)[i], wr);
            }
            pert = std::max(pert, row);
        }
        const double lo = h * emin - pert, hi = h * emax + pert;
        const double c = 0.5 * (hi + lo);
        const double rho = 0.5 * (hi - lo) * (1.0 + 1e-6) + 1e-12;
        op.coef = detail::chebyshev_coefficients(c, rho, opt.series_tol);
        for (int i = 0; i < N; ++i) {
            double* row = op.s.data() + static_cast<std::size_t>(i) * width + w;
            for (int d = -w; d <= w; ++d) {
                const int j = i + d;
                double v = 0.0;
                if (j >= 0 && j < N) {
                    if (std::abs(d) <= wc) v += beta * Cr.diag(d)[i];
                    if (std::abs(d) <= wh) v += h * H0.diag(d)[i];
                }
                if (d == 0) v -= c;
                row[d] = v / rho;
            }
            op.w_lo[i] = i > 0 ? gamma * W.diag(-1)[i] / rho : 0.0;
            op.w_hi[i] = i + 1 < N ? gamma * W.diag(1)[i] / rho : 0.0;
        }
        std::vector<int> counts(panels, 0);
        parallel_for(panels, workers, [&](int b, int wk) {
            counts[b] = detail::apply_step(op, re[b], im[b], scratch[wk].data());
        });
        for (int b = 0; b < panels; ++b) matvecs += counts[b];
    }

    Eigen::MatrixXcd U(N, N);
    for (int b = 0; b < panels; ++b)
        for (int c = 0; c < detail::kPanel; ++c) {
            const int col = b * detail::kPanel + c;
            if (col >= N) continue;
            for (int i = 0; i < N; ++i) {
                const std::size_t k = static_cast<std::size_t>(i) * detail::kPanel + c;
                U(i, col) = {re[b][k], im[b][k]};
            }
        }
    if (report) {
        report->steps_used = steps;
        report->matvecs = matvecs;
    }
    return U;
}

/// Propagator with the unitarity contract: on violation the step count is
/// doubled once; a second violation raises IntegrationError.
inline Eigen::MatrixXcd propagate_one_period(const model::OscillatorParams& p, const model::FockSpace& space,
                                             PropagatorOptions opt = {}, PropagatorReport* report = nullptr) {
    p.validate();
    if (opt.steps < 256) {
        std::ostringstream os;
        os << "propagate_one_period: steps must be >= 256 (got " << opt.steps << ")";
        throw InvalidParameter(os.str());
    }
    PropagatorReport rep;
    Eigen::MatrixXcd U = propagate_fixed(p, space, opt, &rep);
    rep.unitarity_defect = max_unitarity_defect(U);
    if (!(rep.unitarity_defect < opt.unitarity_tol)) {
        const double first = rep.unitarity_defect;
        opt.steps *= 2;
        U = propagate_fixed(p, space, opt, &rep);
        rep.unitarity_defect = max_unitarity_defect(U);
        if (!(rep.unitarity_defect < opt.unitarity_tol)) {
            std::ostringstream os;
            os << "one-period propagator not unitary: max|U^dag U - I| = " << first << " at " << opt.steps / 2
               << " steps and " << rep.unitarity_defect << " at " << opt.steps << " steps";
            throw IntegrationError(os.str());
        }
    }
    if (report) *report = rep;
    return U;
}

}  // namespace kpo::floquet
