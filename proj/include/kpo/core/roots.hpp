#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <utility>

#include "kpo/core/error.hpp"

namespace kpo {

struct RootOptions {
    double abs_tol = 1e-12;
    int max_iter = 200;
};

/// Safeguarded secant on a sign-changing bracket [lo, hi]. Each iteration
/// takes a secant step when it stays strictly inside the current bracket and
/// shrinks it by at least half over two iterations; otherwise it bisects.
template <class F>
double find_root(F&& f, double lo, double hi, RootOptions opt = {}) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (!(std::isfinite(flo) && std::isfinite(fhi)) || (flo > 0) == (fhi > 0)) {
        std::ostringstream os;
        os << "root not bracketed on [" << lo << ", " << hi << "]: f = (" << flo << ", " << fhi << ")";
        throw RangeError(os.str());
    }
    double width_before = std::abs(hi - lo);
    bool force_bisect = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        double x = 0.5 * (lo + hi);
        if (!force_bisect) {
            const double xs = hi - fhi * (hi - lo) / (fhi - flo);
            if (std::isfinite(xs) && xs > std::min(lo, hi) && xs < std::max(lo, hi)) x = xs;
        }
        const double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx > 0) == (flo > 0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        const double width = std::abs(hi - lo);
        if (width <= opt.abs_tol) return std::abs(flo) < std::abs(fhi) ? lo : hi;
        // secant crawling from one side: fall back to bisection next round
        force_bisect = width > 0.5 * width_before;
        width_before = width;
    }
    throw ConvergenceError("root finder exceeded iteration budget");
}

}  // namespace kpo
