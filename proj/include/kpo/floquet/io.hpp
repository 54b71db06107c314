#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "kpo/core/error.hpp"
#include "kpo/floquet/spectrum.hpp"

namespace kpo::floquet {

/// CSV with header j,quasienergy_over_w0,converged,mean_n; quasienergies are
/// divided by omega0.
inline void write_spectrum_csv(const FloquetSolution& sol, double omega0, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out << "j,quasienergy_over_w0,converged,mean_n\n";
    char buf[128];
    for (int j = 0; j < sol.N; ++j) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g\n", j, sol.quasienergies[j] / omega0,
                      sol.converged[j] ? 1 : 0, sol.mean_n[j]);
        out << buf;
    }
    if (!out) throw FormatError("write failed: " + path);
}

}  // namespace kpo::floquet
