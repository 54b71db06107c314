#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <sstream>

#include "kpo/core/error.hpp"
#include "kpo/model/fock.hpp"

namespace kpo::qphase {

struct CoherentState {
    std::complex<double> alpha;
    Eigen::VectorXcd vector;
    double hbar_eff = 1.0;
};

/// alpha = (q + i p) / sqrt(2 hbar_eff).
inline std::complex<double> alpha_of(double q, double p, double hbar_eff = 1.0) {
    return std::complex<double>(q, p) / std::sqrt(2.0 * hbar_eff);
}

/// Fock amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!) evaluated in the log
/// domain. Throws TruncationError when the population beyond N reaches 1e-10.
inline Eigen::VectorXcd coherent_amplitudes(std::complex<double> alpha, int N, double max_tail = 1e-10) {
    Eigen::VectorXcd v(N);
    const double r = std::abs(alpha);
    const double phase = std::arg(alpha);
    double kept = 0.0;
    for (int n = 0; n < N; ++n) {
        if (r == 0.0) {
            v[n] = n == 0 ? 1.0 : 0.0;
        } else {
            const double logmag = -0.5 * r * r + n * std::log(r) - 0.5 * std::lgamma(n + 1.0);
            v[n] = std::polar(std::exp(logmag), n * phase);
        }
        kept += std::norm(v[n]);
    }
    // the tail sum of a Poisson(r^2) distribution, by complement when large
    double tail = 1.0 - kept;
    if (tail < 1e-6) {
        // direct summation of the first neglected terms is more accurate here
        tail = 0.0;
        double logp = -r * r + N * std::log(std::max(r, 1e-300) * r) - std::lgamma(N + 1.0);
        for (int n = N; n < N + 4000; ++n) {
            const double term = r == 0.0 ? 0.0 : std::exp(logp);
            tail += term;
            if (term < 1e-18 * std::max(tail, 1e-300) || term == 0.0) break;
            logp += std::log(r * r) - std::log(n + 1.0);
        }
    }
    if (tail >= max_tail) {
        std::ostringstream os;
        os << "coherent state |alpha|^2 = " << r * r << " leaks " << tail << " outside N = " << N
           << "; need N > |alpha|^2 + 8|alpha| ~ " << static_cast<int>(std::ceil(r * r + 8 * r));
        throw TruncationError(os.str());
    }
    return v;
}

inline CoherentState coherent_state(std::complex<double> alpha, const model::FockSpace& space,
                                    double hbar_eff = 1.0) {
    return CoherentState{alpha, coherent_amplitudes(alpha, space.dim()), hbar_eff};
}

/// Coherent state centred at the phase-space point (q, p).
inline CoherentState coherent_state_at(double q, double p, const model::FockSpace& space, double hbar_eff = 1.0) {
    return coherent_state(alpha_of(q, p, hbar_eff), space, hbar_eff);
}

}  // namespace kpo::qphase
