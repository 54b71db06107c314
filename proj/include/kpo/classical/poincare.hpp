#pragma once

#include <vector>

#include "kpo/classical/integrate.hpp"
#include "kpo/core/parallel.hpp"

namespace kpo::classical {

struct SectionOrbit {
    int id = 0;
    std::vector<PhasePoint> points;  ///< samples at t = k T_d, k = 0..
    bool escaped = false;
    int escape_period = -1;
};

/// Stroboscopic samples of each orbit over n_periods drive periods.
/// Escaping orbits are truncated at their last full period.
inline std::vector<SectionOrbit> poincare_section(const std::vector<PhasePoint>& ics, const ClassicalParams& cp,
                                                  int n_periods, IntegratorSettings s = {}, int workers = 1) {
    if (n_periods < 1) throw InvalidParameter("poincare_section: n_periods must be >= 1");
    if (s.escape_radius == 0.0) s.escape_radius = default_escape_radius(cp);
    std::vector<SectionOrbit> out(ics.size());
    const double T = cp.drive_period();
    parallel_for(static_cast<int>(ics.size()), workers, [&](int i) {
        SectionOrbit& o = out[i];
        o.id = i;
        o.points.reserve(n_periods + 1);
        std::array<double, 2> x{ics[i].q, ics[i].p};
        o.points.push_back(ics[i]);
        FlowSystem sys{cp};
        double t = 0.0, dt = 0.0;
        for (int k = 1; k <= n_periods; ++k) {
            const AdvanceResult r = advance(sys, x, t, k * T, dt, s);
            if (r.escaped) {
                o.escaped = true;
                o.escape_period = k;
                break;
            }
            t = k * T;
            o.points.push_back({x[0], x[1]});
        }
    });
    return out;
}

}  // namespace kpo::classical
