#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include "kpo/core/error.hpp"
#include "kpo/core/lapack.hpp"
#include "kpo/floquet/propagator.hpp"

namespace kpo::floquet {

struct SpectrumOptions {
    double tail_fraction = 0.1;     ///< top fraction of Fock states checked for leakage
    double tail_weight_max = 1e-8;  ///< a state is converged below this tail population
};

struct FloquetSolution {
    Eigen::MatrixXcd U;
    Eigen::VectorXd quasienergies;  ///< ascending, eps * T_d in (-pi, pi]
    Eigen::MatrixXcd states;        ///< column j belongs to quasienergies[j]
    std::vector<char> converged;
    Eigen::VectorXd mean_n;
    Eigen::VectorXd tail_weight;
    int N = 0;
    double T_d = 0.0;
    double max_residual = 0.0;  ///< max |U v - lambda v| over converged states

    int converged_count() const { return static_cast<int>(std::count(converged.begin(), converged.end(), 1)); }

    std::vector<double> converged_quasienergies() const {
        std::vector<double> out;
        for (int j = 0; j < N; ++j)
            if (converged[j]) out.push_back(quasienergies[j]);
        return out;
    }
};

/// Folds -arg(lambda) / T_d so that eps * T_d lies in (-pi, pi].
inline double fold_quasienergy(double phase, double T_d) {
    constexpr double pi = std::numbers::pi;
    double x = std::remainder(phase, 2.0 * pi);  // [-pi, pi]
    if (x <= -pi) x += 2.0 * pi;
    return x / T_d;
}

inline FloquetSolution floquet_spectrum(Eigen::MatrixXcd U, double T_d, SpectrumOptions opt = {}) {
    const int N = static_cast<int>(U.rows());
    if (!(opt.tail_fraction > 0.0 && opt.tail_fraction <= 1.0))
        throw InvalidParameter("tail_fraction must lie in (0, 1]");
    ComplexSchur sch = complex_schur(U);

    FloquetSolution sol;
    sol.N = N;
    sol.T_d = T_d;
    Eigen::VectorXd eps(N);
    for (int j = 0; j < N; ++j) eps[j] = fold_quasienergy(-std::arg(sch.T(j, j)), T_d);
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eps[a] < eps[b]; });

    const int tail = std::max(1, static_cast<int>(std::ceil(opt.tail_fraction * N)));
    sol.quasienergies.resize(N);
    sol.states.resize(N, N);
    sol.converged.assign(N, 0);
    sol.mean_n.resize(N);
    sol.tail_weight.resize(N);
    for (int k = 0; k < N; ++k) {
        const int j = order[k];
        sol.quasienergies[k] = eps[j];
        sol.states.col(k) = sch.Z.col(j);
        const Eigen::VectorXd pop = sch.Z.col(j).cwiseAbs2();
        sol.tail_weight[k] = pop.tail(tail).sum();
        sol.converged[k] = sol.tail_weight[k] < opt.tail_weight_max;
        double m = 0.0;
        for (int n = 0; n < N; ++n) m += n * pop[n];
        sol.mean_n[k] = m;
    }
    std::vector<int> keep;
    for (int k = 0; k < N; ++k)
        if (sol.converged[k]) keep.push_back(k);
    if (!keep.empty()) {
        Eigen::MatrixXcd V(N, keep.size());
        for (std::size_t c = 0; c < keep.size(); ++c) V.col(c) = sol.states.col(keep[c]);
        Eigen::MatrixXcd R = U * V;
        double worst = 0.0;
        for (std::size_t c = 0; c < keep.size(); ++c) {
            const std::complex<double> lambda = std::polar(1.0, -sol.quasienergies[keep[c]] * T_d);
            worst = std::max(worst, (R.col(c) - lambda * V.col(c)).norm());
        }
        sol.max_residual = worst;
    }
    sol.U = std::move(U);
    return sol;
}

}  // namespace kpo::floquet
