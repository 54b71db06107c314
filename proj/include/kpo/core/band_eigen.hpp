#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <sstream>
#include <vector>

#include "kpo/core/banded.hpp"
#include "kpo/core/error.hpp"

namespace kpo {

/// Eigenvalues (ascending) of a real symmetric banded matrix via LAPACK dsbev.
inline Eigen::VectorXd banded_symmetric_eigenvalues(const BandedMatrix& A) {
    const lapack_int n = A.size();
    const lapack_int kd = A.half_width();
    // upper band storage, column-major: ab(kd + i - j, j) = A(i, j)
    std::vector<double> ab(static_cast<std::size_t>(kd + 1) * n, 0.0);
    for (lapack_int j = 0; j < n; ++j)
        for (lapack_int i = std::max<lapack_int>(0, j - kd); i <= j; ++i)
            ab[static_cast<std::size_t>(j) * (kd + 1) + (kd + i - j)] = A(i, j);
    Eigen::VectorXd w(n);
    const lapack_int info = LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'U', n, kd, ab.data(), kd + 1, w.data(), nullptr, 1);
    if (info != 0) {
        std::ostringstream os;
        os << "dsbev failed with info = " << info << " (n = " << n << ")";
        throw EigenError(os.str());
    }
    return w;
}

}  // namespace kpo
