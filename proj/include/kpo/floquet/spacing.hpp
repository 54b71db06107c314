#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "kpo/core/error.hpp"
#include "kpo/floquet/spectrum.hpp"

namespace kpo::floquet {

/// Reference values that pin r_bar = 0 (Poisson) and r_bar = 1 (COE).
struct RatioReferences {
    double poisson = 0.39;
    double coe = 0.53;

    /// 2 ln 2 - 1 and the large-N circular orthogonal ensemble mean 0.5307.
    static RatioReferences analytic() { return {2.0 * std::numbers::ln2 - 1.0, 0.5307}; }
};

struct SpacingStats {
    double r_tilde = 0.0;
    double r_bar = 0.0;
    int count = 0;           ///< levels used
    bool low_count = false;  ///< fewer than the statistics floor
};

/// Mean of min(r, 1/r) over ratios of consecutive spacings of phases on the
/// circle of circumference `period` (wrap-around spacing included). Ratios
/// with both spacings zero are skipped.
inline SpacingStats spacing_ratio_on_circle(std::vector<double> values, double period,
                                            RatioReferences ref = {}, int floor = 50) {
    const int n = static_cast<int>(values.size());
    if (n < 3) {
        std::ostringstream os;
        os << "spacing ratio needs at least 3 levels (got " << n << ")";
        throw StatisticsError(os.str());
    }
    for (double& v : values) {
        v = std::fmod(v, period);
        if (v < 0) v += period;
    }
    std::sort(values.begin(), values.end());
    std::vector<double> s(n);
    for (int j = 0; j + 1 < n; ++j) s[j] = values[j + 1] - values[j];
    s[n - 1] = values[0] + period - values[n - 1];

    double sum = 0.0;
    int used = 0;
    for (int j = 0; j < n; ++j) {
        const double a = s[j];
        const double b = s[(j + n - 1) % n];
        if (a == 0.0 && b == 0.0) continue;
        sum += std::min(a, b) / std::max(a, b);
        ++used;
    }
    if (used == 0) throw StatisticsError("all spacings vanish");
    SpacingStats st;
    st.r_tilde = sum / used;
    st.r_bar = (st.r_tilde - ref.poisson) / (ref.coe - ref.poisson);
    st.count = n;
    st.low_count = n < floor;
    return st;
}

/// Which quasienergies enter the statistics. `all` ignores the truncation
/// test and is meant for exploration only: its value depends on N whenever
/// unconverged states are present.
enum class LevelSelection { converged, all };

/// Spacing statistics of the converged quasienergies, optionally restricted
/// to states with mean photon number <= n_cut (n_cut < 0 disables the window).
inline SpacingStats spacing_ratio(const FloquetSolution& sol, double n_cut = -1.0, RatioReferences ref = {},
                                  int floor = 50, LevelSelection sel = LevelSelection::converged) {
    std::vector<double> phases;
    for (int j = 0; j < sol.N; ++j) {
        if (sel == LevelSelection::converged && !sol.converged[j]) continue;
        if (n_cut >= 0.0 && sol.mean_n[j] > n_cut) continue;
        phases.push_back(sol.quasienergies[j] * sol.T_d);
    }
    return spacing_ratio_on_circle(std::move(phases), 2.0 * std::numbers::pi, ref, floor);
}

}  // namespace kpo::floquet
