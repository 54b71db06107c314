#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "kpo/classical/dynamics.hpp"

namespace kpo::classical {

enum class Stability { center, hyperbolic, degenerate };

struct CriticalPoint {
    PhasePoint point;
    Stability stability = Stability::degenerate;
    double frequency = 0.0;  ///< centre: linearized frequency
    double rate = 0.0;       ///< hyperbolic: growth rate max(lambda)
};

struct CriticalPointSet {
    std::vector<CriticalPoint> points;  ///< origin, then d-, d+ when they exist
    bool single_well = false;
};

/// Linearization of h0 at (qc, 0): [[0, omega0], [-V''(qc), 0]] with
/// eigenvalues +-sqrt(-omega0 V''(qc)).
inline CriticalPoint classify(double qc, const ClassicalParams& cp) {
    CriticalPoint c;
    c.point = {qc, 0.0};
    const double prod = cp.omega0 * potential_curvature(qc, cp);
    if (prod > 0.0) {
        c.stability = Stability::center;
        c.frequency = std::sqrt(prod);
    } else if (prod < 0.0) {
        c.stability = Stability::hyperbolic;
        c.rate = std::sqrt(-prod);
    }
    return c;
}

inline CriticalPointSet critical_points(const ClassicalParams& cp) {
    CriticalPointSet s;
    s.points.push_back(classify(0.0, cp));
    if (!cp.has_double_well() || cp.g4 == 0.0) {
        s.single_well = true;
        return s;
    }
    const double root = std::sqrt(cp.g3 * cp.g3 - 2.0 * cp.g4 * cp.omega0);
    s.points.push_back(classify(std::numbers::sqrt2 * (-cp.g3 - root) / (4.0 * cp.g4), cp));
    s.points.push_back(classify(std::numbers::sqrt2 * (-cp.g3 + root) / (4.0 * cp.g4), cp));
    return s;
}

}  // namespace kpo::classical
