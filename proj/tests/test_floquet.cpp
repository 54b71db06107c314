#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>

#include "kpo/floquet/io.hpp"
#include "kpo/floquet/propagator.hpp"
#include "kpo/floquet/spacing.hpp"
#include "kpo/floquet/spectrum.hpp"
#include "kpo/qphase/cat.hpp"

using namespace kpo;
using namespace kpo::floquet;
using cd = std::complex<double>;

namespace {

constexpr double kDrive = 1.999866;

model::OscillatorParams driven_small() {
    model::OscillatorParams p;
    p.g3 = 0.03;
    p.g4 = model::g4_for_family(p.g3, 10.0);
    p.omega_d = kDrive;
    p.Omega_d = 0.4;
    return p;
}

// Independent route: integrate i dU/dt = H(t) U column by column with an
// adaptive 7/8 Runge-Kutta pair on the dense Hamiltonian.
Eigen::MatrixXcd odeint_propagator(const model::OscillatorParams& p, int N, double t0) {
    model::FockSpace space(N);
    const Eigen::MatrixXd H0 = model::build_static_hamiltonian(p, space);
    const Eigen::MatrixXcd D = model::build_drive_operator(space);
    using State = std::vector<double>;
    auto rhs = [&](const State& x, State& dx, double t) {
        Eigen::Map<const Eigen::VectorXd> re(x.data(), N), im(x.data() + N, N);
        Eigen::VectorXcd psi = re.cast<cd>() + cd(0, 1) * im.cast<cd>();
        Eigen::VectorXcd h = H0 * psi + p.Omega_d * std::cos(p.omega_d * (t + t0)) * (D * psi);
        Eigen::VectorXcd d = cd(0, -1) * h;
        for (int i = 0; i < N; ++i) {
            dx[i] = d[i].real();
            dx[N + i] = d[i].imag();
        }
    };
    Eigen::MatrixXcd U(N, N);
    namespace ode = boost::numeric::odeint;
    for (int c = 0; c < N; ++c) {
        State x(2 * N, 0.0);
        x[c] = 1.0;
        ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_fehlberg78<State>()), rhs, x,
                                0.0, p.drive_period(), 1e-3);
        for (int i = 0; i < N; ++i) U(i, c) = cd(x[i], x[N + i]);
    }
    return U;
}

double phase_distance(double a, double b) {
    double d = std::remainder(a - b, 2.0 * std::numbers::pi);
    return std::abs(d);
}

}  // namespace

TEST(Propagator, FreeEvolutionIsDiagonal) {
    model::OscillatorParams p;
    p.omega_d = kDrive;
    PropagatorOptions o;
    o.steps = 256;
    Eigen::MatrixXcd U = propagate_one_period(p, model::FockSpace(8), o);
    const double T = p.drive_period();
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const cd want = i == j ? std::polar(1.0, -i * T) : cd(0.0);
            EXPECT_LT(std::abs(U(i, j) - want), 1e-12);
        }
}

TEST(Propagator, UndrivenMatchesEigendecomposition) {
    model::OscillatorParams p = driven_small();
    p.Omega_d = 0.0;
    const int N = 30;
    const Eigen::MatrixXd H0 = model::build_static_hamiltonian(p, model::FockSpace(N));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H0);
    Eigen::VectorXcd ph(N);
    for (int k = 0; k < N; ++k) ph[k] = std::polar(1.0, -es.eigenvalues()[k] * p.drive_period());
    const Eigen::MatrixXcd V = es.eigenvectors().cast<cd>();
    const Eigen::MatrixXcd oracle = V * ph.asDiagonal() * V.adjoint();
    PropagatorOptions o;
    o.steps = 256;
    const Eigen::MatrixXcd U = propagate_one_period(p, model::FockSpace(N), o);
    EXPECT_LT((U - oracle).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Propagator, DrivenMatchesAdaptiveIntegration) {
    const model::OscillatorParams p = driven_small();
    const int N = 16;
    const double t0 = model::default_time_origin(p.omega_d);
    const Eigen::MatrixXcd oracle = odeint_propagator(p, N, t0);
    PropagatorOptions o;
    o.steps = 512;
    const Eigen::MatrixXcd U = propagate_one_period(p, model::FockSpace(N), o);
    EXPECT_LT((U - oracle).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(max_unitarity_defect(U), 1e-9);
}

TEST(Propagator, ConvergenceOrders) {
    const model::OscillatorParams p = driven_small();
    const int N = 16;
    const Eigen::MatrixXcd oracle = odeint_propagator(p, N, model::default_time_origin(p.omega_d));
    auto err = [&](MagnusOrder ord, int steps) {
        PropagatorOptions o;
        o.order = ord;
        o.steps = steps;
        return (propagate_one_period(p, model::FockSpace(N), o) - oracle).cwiseAbs().maxCoeff();
    };
    const double r2 = err(MagnusOrder::second, 256) / err(MagnusOrder::second, 512);
    EXPECT_NEAR(std::log2(r2), 2.0, 0.2);
    const double r4 = err(MagnusOrder::fourth, 256) / err(MagnusOrder::fourth, 512);
    EXPECT_GT(std::log2(r4), 3.5);
}

TEST(Propagator, RejectsTooFewSteps) {
    PropagatorOptions o;
    o.steps = 100;
    EXPECT_THROW(propagate_one_period(driven_small(), model::FockSpace(8), o), InvalidParameter);
}

TEST(Spectrum, FreeEvolutionFolding) {
    model::OscillatorParams p;
    p.omega_d = kDrive;
    const double T = p.drive_period();
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(8, 8);
    for (int n = 0; n < 8; ++n) U(n, n) = std::polar(1.0, -n * T);
    FloquetSolution sol = floquet_spectrum(U, T);
    std::vector<double> want;
    // U = exp(-i eps T) with U_nn = exp(-i n omega0 T): eps_n T = n omega0 T folded
    for (int n = 0; n < 8; ++n) {
        double x = std::fmod(n * T, 2.0 * std::numbers::pi);
        if (x <= -std::numbers::pi) x += 2.0 * std::numbers::pi;
        if (x > std::numbers::pi) x -= 2.0 * std::numbers::pi;
        want.push_back(x / T);
    }
    std::sort(want.begin(), want.end());
    for (int k = 0; k < 8; ++k) {
        EXPECT_NEAR(sol.quasienergies[k], want[k], 1e-12);
        EXPECT_GT(sol.quasienergies[k] * T, -std::numbers::pi);
        EXPECT_LE(sol.quasienergies[k] * T, std::numbers::pi);
    }
    EXPECT_DOUBLE_EQ(fold_quasienergy(-std::numbers::pi, 1.0), std::numbers::pi);
}

class PointA : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        params = model::params_from_targets(0.53e-4, 8.5, 10.0, kDrive);
        scales = model::derived_scales(params, model::kerr_nonlinearity_auto(params).K);
        PropagatorOptions o;
        sol = floquet_spectrum(propagate_one_period(params, model::FockSpace(96), o), params.drive_period());
    }
    static model::OscillatorParams params;
    static model::DerivedScales scales;
    static FloquetSolution sol;
};
model::OscillatorParams PointA::params;
model::DerivedScales PointA::scales;
FloquetSolution PointA::sol;

TEST_F(PointA, UnitaryAndEigenResiduals) {
    EXPECT_LT(max_unitarity_defect(sol.U), 1e-9);
    EXPECT_LT(sol.max_residual, 1e-8);
    EXPECT_GT(sol.converged_count(), 30);
    for (int k = 1; k < sol.N; ++k) EXPECT_LE(sol.quasienergies[k - 1], sol.quasienergies[k]);
}

TEST_F(PointA, StepDoublingChangesLittle) {
    PropagatorOptions o;
    o.steps = 1024;
    FloquetSolution fine = floquet_spectrum(propagate_one_period(params, model::FockSpace(96), o), params.drive_period());
    const double T = params.drive_period();
    for (double e : sol.converged_quasienergies()) {
        double best = 1e9;
        for (double f : fine.converged_quasienergies()) best = std::min(best, phase_distance(e * T, f * T) / T);
        EXPECT_LT(best, 1e-8 * params.omega_d);
    }
}

TEST_F(PointA, TruncationStability) {
    FloquetSolution big =
        floquet_spectrum(propagate_one_period(params, model::FockSpace(144), {}), params.drive_period());
    const double T = params.drive_period();
    int matched = 0;
    const auto small = sol.converged_quasienergies();
    const auto large = big.converged_quasienergies();
    for (double e : small) {
        for (double f : large)
            if (phase_distance(e * T, f * T) < 1e-8) {
                ++matched;
                break;
            }
    }
    EXPECT_GT(double(matched) / small.size(), 0.99);
    EXPECT_GE(large.size(), small.size());
}

TEST_F(PointA, HalfPeriodShiftGivesSameSpectrum) {
    PropagatorOptions o;
    o.t0 = model::default_time_origin(params.omega_d) + 0.5 * params.drive_period();
    FloquetSolution shifted = floquet_spectrum(propagate_one_period(params, model::FockSpace(96), o), params.drive_period());
    const double T = params.drive_period();
    for (double e : sol.converged_quasienergies()) {
        double best = 1e9;
        for (double f : shifted.quasienergies) best = std::min(best, phase_distance(e * T, f * T) / T);
        EXPECT_LT(best, 1e-8 * params.omega_d);
    }
}

TEST_F(PointA, CatPairIsQuasidegenerate) {
    const qphase::CatPair cat = qphase::find_cat_pair(sol, scales);
    EXPECT_GT(cat.quality, 0.9);
    EXPECT_LT(cat.splitting_mod_pi, 1e-2 * cat.mean_spacing);
    EXPECT_NEAR(cat.n_min / 8.079, 1.0, 0.05);
}

TEST_F(PointA, RegularSpacingStatistics) {
    // Needs enough converged levels to wrap the quasienergy circle many times;
    // the small-N set is a smooth quadratic sequence with picket-fence ratios.
    FloquetSolution wide =
        floquet_spectrum(propagate_one_period(params, model::FockSpace(800), {}), params.drive_period());
    const SpacingStats st = spacing_ratio(wide);
    EXPECT_GT(st.count, 300);
    EXPECT_LT(st.r_bar, 0.2);
}

TEST(Spacing, PicketFence) {
    std::vector<double> v;
    for (int j = 0; j < 100; ++j) v.push_back(0.37 + j * 0.05);
    const SpacingStats st = spacing_ratio_on_circle(v, 5.0);
    EXPECT_NEAR(st.r_tilde, 1.0, 1e-12);
}

TEST(Spacing, PoissonSurrogate) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    std::vector<double> v(100000);
    for (double& x : v) x = u(rng);
    const SpacingStats st = spacing_ratio_on_circle(v, 2.0 * std::numbers::pi);
    EXPECT_NEAR(st.r_tilde, 2.0 * std::numbers::ln2 - 1.0, 0.005);
}

TEST(Spacing, NormalizationEndpoints) {
    RatioReferences ref;
    EXPECT_DOUBLE_EQ((0.39 - ref.poisson) / (ref.coe - ref.poisson), 0.0);
    EXPECT_DOUBLE_EQ((0.53 - ref.poisson) / (ref.coe - ref.poisson), 1.0);
    const RatioReferences a = RatioReferences::analytic();
    EXPECT_NEAR(a.poisson, 0.386294, 1e-6);
}

TEST(Spacing, ShiftAndScaleInvariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(500);
    for (double& x : v) x = u(rng);
    const double r0 = spacing_ratio_on_circle(v, 1.0).r_tilde;
    std::vector<double> shifted = v;
    for (double& x : shifted) x += 0.3141;
    EXPECT_NEAR(spacing_ratio_on_circle(shifted, 1.0).r_tilde, r0, 1e-12);
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= 7.5;
    EXPECT_NEAR(spacing_ratio_on_circle(scaled, 7.5).r_tilde, r0, 1e-12);
}

TEST(Spacing, TooFewLevels) {
    EXPECT_THROW(spacing_ratio_on_circle({0.1, 0.2}, 1.0), StatisticsError);
    const SpacingStats st = spacing_ratio_on_circle({0.1, 0.2, 0.5}, 1.0);
    EXPECT_TRUE(st.low_count);
}

TEST(Spacing, UndrivenSpectrumIsNotCoe) {
    model::OscillatorParams p = model::params_from_targets(0.53e-4, 8.5, 10.0, kDrive);
    p.Omega_d = 0.0;
    FloquetSolution sol = floquet_spectrum(propagate_one_period(p, model::FockSpace(800), {}), p.drive_period());
    const SpacingStats st = spacing_ratio(sol);
    EXPECT_NEAR(st.r_tilde, 2.0 * std::numbers::ln2 - 1.0, 0.03);
    EXPECT_LT(st.r_bar, 0.5);
}

TEST(SpectrumIo, CsvHeaderAndRows) {
    model::OscillatorParams p;
    p.omega_d = kDrive;
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(4, 4);
    FloquetSolution sol = floquet_spectrum(U, p.drive_period());
    const std::string path = ::testing::TempDir() + "spectrum.csv";
    write_spectrum_csv(sol, 1.0, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "j,quasienergy_over_w0,converged,mean_n");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4);
}
