#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <vector>

#include "kpo/core/error.hpp"

namespace kpo {

/// Square real matrix stored by diagonals: `diag(d)[i] = A(i, i + d)` for
/// |d| <= half_width. Entries that fall outside the matrix are kept as zero.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(int n, int half_width)
        : n_(n), w_(half_width), data_(static_cast<std::size_t>(2 * half_width + 1) * n, 0.0) {
        if (n <= 0 || half_width < 0) throw InvalidParameter("BandedMatrix: bad shape");
    }

    static BandedMatrix identity(int n) {
        BandedMatrix m(n, 0);
        std::fill(m.data_.begin(), m.data_.end(), 1.0);
        return m;
    }

    int size() const noexcept { return n_; }
    int half_width() const noexcept { return w_; }

    double* diag(int d) noexcept { return data_.data() + static_cast<std::size_t>(d + w_) * n_; }
    const double* diag(int d) const noexcept { return data_.data() + static_cast<std::size_t>(d + w_) * n_; }

    double operator()(int i, int j) const noexcept {
        const int d = j - i;
        if (d < -w_ || d > w_) return 0.0;
        return diag(d)[i];
    }
    void set(int i, int j, double v) {
        const int d = j - i;
        if (d < -w_ || d > w_) throw InvalidParameter("BandedMatrix::set outside band");
        diag(d)[i] = v;
    }

    BandedMatrix operator*(const BandedMatrix& o) const {
        assert(o.n_ == n_);
        BandedMatrix r(n_, std::min(w_ + o.w_, n_ - 1));
        for (int i = 0; i < n_; ++i) {
            for (int d1 = -w_; d1 <= w_; ++d1) {
                const int k = i + d1;
                if (k < 0 || k >= n_) continue;
                const double a = diag(d1)[i];
                if (a == 0.0) continue;
                for (int d2 = -o.w_; d2 <= o.w_; ++d2) {
                    const int j = k + d2;
                    if (j < 0 || j >= n_ || std::abs(j - i) > r.w_) continue;
                    r.diag(j - i)[i] += a * o.diag(d2)[k];
                }
            }
        }
        return r;
    }

    BandedMatrix operator+(const BandedMatrix& o) const { return axpby(1.0, *this, 1.0, o); }
    BandedMatrix operator-(const BandedMatrix& o) const { return axpby(1.0, *this, -1.0, o); }
    BandedMatrix operator*(double s) const {
        BandedMatrix r = *this;
        for (double& v : r.data_) v *= s;
        return r;
    }

    /// a*A + b*B with the wider band of the two.
    static BandedMatrix axpby(double a, const BandedMatrix& A, double b, const BandedMatrix& B) {
        assert(A.n_ == B.n_);
        BandedMatrix r(A.n_, std::max(A.w_, B.w_));
        for (int d = -A.w_; d <= A.w_; ++d)
            for (int i = 0; i < A.n_; ++i) r.diag(d)[i] += a * A.diag(d)[i];
        for (int d = -B.w_; d <= B.w_; ++d)
            for (int i = 0; i < B.n_; ++i) r.diag(d)[i] += b * B.diag(d)[i];
        return r;
    }

    BandedMatrix transpose() const {
        BandedMatrix r(n_, w_);
        for (int d = -w_; d <= w_; ++d)
            for (int i = 0; i < n_; ++i) {
                const int j = i + d;
                if (j >= 0 && j < n_) r.diag(-d)[j] = diag(d)[i];
            }
        return r;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
        for (int d = -w_; d <= w_; ++d)
            for (int i = 0; i < n_; ++i) {
                const int j = i + d;
                if (j >= 0 && j < n_) m(i, j) = diag(d)[i];
            }
        return m;
    }

    /// Largest |A(i,j) - s*A(j,i)|; s = +1 checks symmetry, s = -1 antisymmetry.
    double symmetry_defect(double s = 1.0) const {
        double worst = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = std::max(0, i - w_); j <= std::min(n_ - 1, i + w_); ++j)
                worst = std::max(worst, std::abs((*this)(i, j) - s * (*this)(j, i)));
        return worst;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    int n_ = 0;
    int w_ = 0;
    std::vector<double> data_;
};

}  // namespace kpo
