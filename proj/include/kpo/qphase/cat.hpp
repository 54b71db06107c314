#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kpo/floquet/spectrum.hpp"
#include "kpo/model/params.hpp"
#include "kpo/qphase/coherent.hpp"

namespace kpo::qphase {

struct CatOptions {
    /// Place the targets at Pi +- sqrt(Gamma) (lemniscate centre offset) rather than +-sqrt(Gamma).
    bool center_offset = true;
};

struct CatPair {
    int first = -1;
    int second = -1;
    std::complex<double> alpha_plus, alpha_minus;
    double quality = 0.0;      ///< mean weight of the pair inside span{|alpha+>, |alpha->}
    double n_first = 0.0;
    double n_second = 0.0;
    double n_min = 0.0;        ///< mean photon number, averaged over the pair
    double splitting = 0.0;    ///< |eps1 - eps2| T_d
    /// Distance of the phase splitting from the nearest multiple of pi. The
    /// two cat states swap parity sectors each period, so in the lab frame
    /// their eigenphases sit near pi apart.
    double splitting_mod_pi = 0.0;
    double mean_spacing = 0.0; ///< 2 pi / (number of converged states)
};

/// Ranks Floquet states by their weight on the coherent targets at the two
/// well minima and returns the best two.
inline CatPair find_cat_pair(const floquet::FloquetSolution& sol, const model::DerivedScales& scales,
                             CatOptions opt = {}) {
    const double offset = opt.center_offset ? scales.Pi : 0.0;
    const double half = std::sqrt(std::abs(scales.Gamma));
    CatPair out;
    out.alpha_plus = offset + half;
    out.alpha_minus = offset - half;
    const Eigen::VectorXcd ap = coherent_amplitudes(out.alpha_plus, sol.N, 1.0);
    const Eigen::VectorXcd am = coherent_amplitudes(out.alpha_minus, sol.N, 1.0);
    const Eigen::VectorXd wp = (sol.states.adjoint() * ap).cwiseAbs2();
    const Eigen::VectorXd wm = (sol.states.adjoint() * am).cwiseAbs2();
    const Eigen::VectorXd weight = wp + wm;

    std::vector<int> idx(sol.N);
    for (int j = 0; j < sol.N; ++j) idx[j] = j;
    std::partial_sort(idx.begin(), idx.begin() + std::min(2, sol.N), idx.end(),
                      [&](int a, int b) { return weight[a] > weight[b]; });
    out.first = idx[0];
    out.second = sol.N > 1 ? idx[1] : idx[0];

    // projector onto span{|a+>, |a->} through the 2x2 Gram matrix
    Eigen::MatrixXcd B(sol.N, 2);
    B.col(0) = ap;
    B.col(1) = am;
    const Eigen::Matrix2cd G = B.adjoint() * B;
    auto span_weight = [&](int j) {
        const Eigen::Vector2cd c = B.adjoint() * sol.states.col(j);
        return std::real(c.dot(G.ldlt().solve(c)));
    };
    out.quality = std::clamp(0.5 * (span_weight(out.first) + span_weight(out.second)), 0.0, 1.0);
    out.n_first = sol.mean_n[out.first];
    out.n_second = sol.mean_n[out.second];
    out.n_min = 0.5 * (out.n_first + out.n_second);
    const double d = std::abs(sol.quasienergies[out.first] - sol.quasienergies[out.second]) * sol.T_d;
    out.splitting = d;
    const double r = std::fmod(d, std::numbers::pi);
    out.splitting_mod_pi = std::min(r, std::numbers::pi - r);
    out.mean_spacing = 2.0 * std::numbers::pi / std::max(1, sol.converged_count());
    return out;
}

}  // namespace kpo::qphase
