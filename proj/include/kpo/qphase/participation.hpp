#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "kpo/core/error.hpp"
#include "kpo/floquet/spectrum.hpp"

namespace kpo::qphase {

struct Participation {
    double ratio = 0.0;        ///< 1 / sum_j |<alpha|F_j>|^4
    double leak = 0.0;         ///< weight on non-converged Floquet states
    bool leak_flagged = false; ///< leak above 1%
};

/// Participation ratio of a normalized state over the full Floquet basis.
inline Participation participation_ratio(const Eigen::VectorXcd& state, const floquet::FloquetSolution& sol) {
    const double norm = state.norm();
    if (std::abs(norm - 1.0) > 1e-8) {
        std::ostringstream os;
        os << "participation_ratio needs a normalized state (norm = " << norm << ")";
        throw InvalidParameter(os.str());
    }
    const Eigen::VectorXd w = (sol.states.adjoint() * state).cwiseAbs2();
    Participation out;
    out.ratio = 1.0 / w.squaredNorm();
    for (int j = 0; j < sol.N; ++j)
        if (!sol.converged[j]) out.leak += w[j];
    out.leak_flagged = out.leak > 0.01;
    return out;
}

}  // namespace kpo::qphase
