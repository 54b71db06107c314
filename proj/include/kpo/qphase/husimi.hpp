#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "kpo/core/error.hpp"
#include "kpo/core/parallel.hpp"
#include "kpo/model/params.hpp"

namespace kpo::qphase {

/// Uniform rectangular (q, p) grid; nodes include both ends.
struct PhaseGrid {
    double q_min = -1.0, q_max = 1.0;
    double p_min = -1.0, p_max = 1.0;
    int nq = 101, np = 101;

    double dq() const { return (q_max - q_min) / (nq - 1); }
    double dp() const { return (p_max - p_min) / (np - 1); }
    double q(int i) const { return q_min + dq() * i; }
    double p(int j) const { return p_min + dp() * j; }

    void validate() const {
        if (nq < 2 || np < 2) throw InvalidParameter("phase grid needs at least 2 nodes per axis");
        if (!(q_max > q_min) || !(p_max > p_min)) throw InvalidParameter("phase grid bounds are empty");
    }
};

/// Grid around the double well: the lemniscate bounding box scaled by `scale`
/// about its centre, padded by `widths` coherent widths sqrt(hbar) per side.
inline PhaseGrid double_well_grid(const model::DerivedScales& s, double hbar_eff, int nodes, double scale = 1.5,
                                  double widths = 4.0) {
    const double g = std::abs(s.Gamma);
    const double half_q = scale * 2.0 * std::sqrt(g) + widths * std::sqrt(hbar_eff);
    const double half_p = scale * std::sqrt(g / 2.0) + widths * std::sqrt(hbar_eff);
    const double c = s.center_offset();
    return {c - half_q, c + half_q, -half_p, half_p, nodes, nodes};
}

/// Values on a grid, row-major with q fastest: value(i, j) = values[j * nq + i].
struct GridField {
    PhaseGrid grid;
    std::vector<double> values;
    double hbar_eff = 1.0;

    double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.nq + i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.nq + i]; }
    double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
    double boundary_max() const {
        double b = 0.0;
        for (int i = 0; i < grid.nq; ++i) b = std::max({b, at(i, 0), at(i, grid.np - 1)});
        for (int j = 0; j < grid.np; ++j) b = std::max({b, at(0, j), at(grid.nq - 1, j)});
        return b;
    }
    /// Trapezoid integral of values d^2alpha, d^2alpha = dq dp / (2 hbar).
    double integral() const { return trapezoid([](double v) { return v; }); }

    template <class F>
    double trapezoid(F f) const {
        double sum = 0.0;
        for (int j = 0; j < grid.np; ++j) {
            const double wj = (j == 0 || j == grid.np - 1) ? 0.5 : 1.0;
            for (int i = 0; i < grid.nq; ++i) {
                const double wi = (i == 0 || i == grid.nq - 1) ? 0.5 : 1.0;
                sum += wi * wj * f(at(i, j));
            }
        }
        return sum * grid.dq() * grid.dp() / (2.0 * hbar_eff);
    }
};

/// <alpha|psi> for a Fock-basis state. The Poisson weights are built by the
/// recurrence t_n = t_{n-1} conj(alpha)/sqrt(n), rescaled whenever they grow
/// large so that |alpha|^2 in the hundreds neither overflows nor underflows.
inline std::complex<double> coherent_overlap(std::complex<double> alpha, const Eigen::VectorXcd& psi) {
    const std::complex<double> ca = std::conj(alpha);
    std::complex<double> t = 1.0, acc = psi.size() ? psi[0] : 0.0;
    double log_scale = 0.0;
    for (Eigen::Index n = 1; n < psi.size(); ++n) {
        t *= ca / std::sqrt(static_cast<double>(n));
        acc += t * psi[n];
        const double m = std::abs(t);
        if (m > 1e150) {
            t /= m;
            acc /= m;
            log_scale += std::log(m);
        }
    }
    return acc * std::exp(log_scale - 0.5 * std::norm(alpha));
}

enum class Coverage { ok, warn };

struct HusimiField {
    GridField field;
    Coverage coverage = Coverage::ok;
    double boundary_ratio = 0.0;  ///< max boundary Q / max Q
};

/// Q(q, p) = |<alpha|psi>|^2 / pi with alpha = (q + i p)/sqrt(2 hbar).
/// Warns when boundary Q exceeds 1e-6 max Q; throws above `error_ratio`.
inline HusimiField husimi(const Eigen::VectorXcd& psi, const PhaseGrid& grid, double hbar_eff = 1.0,
                          int workers = 1, double warn_ratio = 1e-6, double error_ratio = 1e-3) {
    grid.validate();
    if (!(hbar_eff > 0.0)) throw InvalidParameter("hbar_eff must be > 0");
    HusimiField h;
    h.field.grid = grid;
    h.field.hbar_eff = hbar_eff;
    h.field.values.assign(static_cast<std::size_t>(grid.nq) * grid.np, 0.0);
    const double scale = 1.0 / std::sqrt(2.0 * hbar_eff);
    parallel_for(grid.np, workers, [&](int j) {
        for (int i = 0; i < grid.nq; ++i) {
            const std::complex<double> a(grid.q(i) * scale, grid.p(j) * scale);
            h.field.at(i, j) = std::norm(coherent_overlap(a, psi)) / std::numbers::pi;
        }
    });
    const double mx = h.field.max();
    h.boundary_ratio = mx > 0.0 ? h.field.boundary_max() / mx : 0.0;
    if (h.boundary_ratio > error_ratio) {
        std::ostringstream os;
        os << "Husimi grid does not cover the state: boundary Q / max Q = " << h.boundary_ratio << " > "
           << error_ratio;
        throw CoverageError(os.str());
    }
    if (h.boundary_ratio > warn_ratio) h.coverage = Coverage::warn;
    return h;
}

enum class EntropyConvention {
    over_pi,   ///< S = -(1/pi) int Q ln Q d^2alpha
    standard,  ///< Wehrl: S = -int Q ln Q d^2alpha
};

/// Shannon entropy of a Husimi field by the trapezoid rule.
inline double wehrl_entropy(const GridField& Q, EntropyConvention conv = EntropyConvention::over_pi) {
    const double s = -Q.trapezoid([](double v) { return v > 0.0 ? v * std::log(v) : 0.0; });
    return conv == EntropyConvention::over_pi ? s / std::numbers::pi : s;
}

inline double wehrl_entropy(const Eigen::VectorXcd& psi, const PhaseGrid& grid, double hbar_eff = 1.0,
                            EntropyConvention conv = EntropyConvention::over_pi, int workers = 1) {
    return wehrl_entropy(husimi(psi, grid, hbar_eff, workers).field, conv);
}

}  // namespace kpo::qphase
