#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <complex>
#include <sstream>

#include "kpo/core/error.hpp"

namespace kpo {

struct ComplexSchur {
    Eigen::MatrixXcd T;  ///< upper triangular
    Eigen::MatrixXcd Z;  ///< unitary Schur vectors, A = Z T Z^dag
};

/// Complex Schur decomposition through LAPACK zgees. For a normal matrix T is
/// diagonal up to rounding and the columns of Z are orthonormal eigenvectors.
inline ComplexSchur complex_schur(const Eigen::MatrixXcd& A) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    if (A.cols() != A.rows()) throw InvalidParameter("complex_schur: matrix must be square");
    ComplexSchur out;
    out.T = A;  // column-major, overwritten by T
    out.Z.resize(n, n);
    Eigen::VectorXcd w(n);
    lapack_int sdim = 0;
    const lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n,
                                          reinterpret_cast<lapack_complex_double*>(out.T.data()), n, &sdim,
                                          reinterpret_cast<lapack_complex_double*>(w.data()),
                                          reinterpret_cast<lapack_complex_double*>(out.Z.data()), n);
    if (info != 0) {
        std::ostringstream os;
        os << "zgees failed with info = " << info << " (n = " << n << ", max |A| = " << A.cwiseAbs().maxCoeff()
           << ", finite = " << A.allFinite() << ")";
        throw EigenError(os.str());
    }
    return out;
}

}  // namespace kpo
