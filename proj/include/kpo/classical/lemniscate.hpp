#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "kpo/classical/dynamics.hpp"
#include "kpo/core/error.hpp"
#include "kpo/model/params.hpp"

namespace kpo::classical {

struct Lemniscate {
    PhasePoint center;               ///< hyperbolic point (sqrt2 Pi, 0)
    double focal = 0.0;              ///< sqrt(2 Gamma)
    double area = 0.0;               ///< 4 Gamma
    double area_quadrature = 0.0;    ///< shoelace area of the sampled curve
    double n_in = 0.0;               ///< 2 Gamma / pi
    std::vector<PhasePoint> right;   ///< closed lobe around the well at +focal
    std::vector<PhasePoint> left;
};

/// Bernoulli lemniscate r^2 = 4 Gamma cos(2 theta) around the displaced
/// hyperbolic point, sampled with `samples` points per lobe.
inline Lemniscate lemniscate(const model::DerivedScales& s, int samples = 2000) {
    if (!(s.Gamma > 0.0)) throw InvalidParameter("lemniscate needs Gamma > 0");
    if (samples < 8) throw InvalidParameter("lemniscate needs at least 8 samples per lobe");
    Lemniscate L;
    L.center = {s.center_offset(), 0.0};
    L.focal = s.focal_distance();
    L.area = 4.0 * s.Gamma;
    L.n_in = s.n_in;
    const double quarter = std::numbers::pi / 4.0;
    double area = 0.0;
    for (int lobe = 0; lobe < 2; ++lobe) {
        auto& pts = lobe == 0 ? L.right : L.left;
        const double base = lobe == 0 ? 0.0 : std::numbers::pi;
        for (int k = 0; k < samples; ++k) {
            const double th = -quarter + 2.0 * quarter * k / (samples - 1);
            const double r = std::sqrt(std::max(0.0, 4.0 * s.Gamma * std::cos(2.0 * th)));
            pts.push_back({L.center.q + r * std::cos(base + th), L.center.p + r * std::sin(base + th)});
        }
        double a = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const auto& u = pts[k];
            const auto& v = pts[(k + 1) % pts.size()];
            a += u.q * v.p - v.q * u.p;
        }
        area += std::abs(0.5 * a);
    }
    L.area_quadrature = area;
    return L;
}

}  // namespace kpo::classical
