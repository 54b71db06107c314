#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "kpo/core/banded.hpp"
#include "kpo/core/error.hpp"

namespace kpo::model {

/// Truncated bosonic basis {|0>, ..., |N-1>}. Operators are built on demand;
/// the banded forms are what the propagator uses, dense forms are for checks
/// and small problems.
///
/// Truncation artifact: [a, a^dag] equals the identity except for the last
/// diagonal entry, which is 1 - N.
class FockSpace {
public:
    explicit FockSpace(int N) : N_(N) {
        if (N < 2) throw InvalidParameter("FockSpace: dimension must be >= 2");
    }

    int dim() const noexcept { return N_; }

    /// a with a|n> = sqrt(n)|n-1>: superdiagonal sqrt(1..N-1).
    BandedMatrix annihilation_banded() const {
        BandedMatrix a(N_, 1);
        for (int n = 1; n < N_; ++n) a.set(n - 1, n, std::sqrt(static_cast<double>(n)));
        return a;
    }
    BandedMatrix creation_banded() const { return annihilation_banded().transpose(); }

    /// x = a + a^dag (the dimensionless quadrature that enters the Hamiltonian).
    BandedMatrix x_banded() const { return annihilation_banded() + creation_banded(); }

    /// W = a^dag - a; the drive operator is i W.
    BandedMatrix w_banded() const { return creation_banded() - annihilation_banded(); }

    BandedMatrix number_banded() const {
        BandedMatrix n(N_, 0);
        for (int k = 0; k < N_; ++k) n.diag(0)[k] = k;
        return n;
    }

    Eigen::MatrixXd a() const { return annihilation_banded().to_dense(); }
    Eigen::MatrixXd adag() const { return creation_banded().to_dense(); }
    Eigen::MatrixXd x() const { return x_banded().to_dense(); }
    Eigen::MatrixXd n_op() const { return number_banded().to_dense(); }

    Eigen::VectorXd number_diagonal() const { return Eigen::VectorXd::LinSpaced(N_, 0.0, N_ - 1.0); }

private:
    int N_;
};

}  // namespace kpo::model
