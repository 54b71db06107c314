#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kpo/classical/critical.hpp"
#include "kpo/classical/full_snail.hpp"
#include "kpo/classical/lemniscate.hpp"
#include "kpo/classical/lyapunov.hpp"
#include "kpo/classical/poincare.hpp"
#include "kpo/classical/threshold.hpp"
#include "kpo/model/hamiltonian.hpp"

using namespace kpo;
using namespace kpo::classical;

namespace {

constexpr double kWd = 1.999866;

ClassicalParams table_point(double K, double Gamma) {
    return model::classical_from_quantum(model::params_from_targets(K, Gamma, 10.0, kWd), 1.0);
}

model::DerivedScales scales_of(double K, double Gamma) {
    const model::OscillatorParams p = model::params_from_targets(K, Gamma, 10.0, kWd);
    return model::derived_scales(p, K);
}

// SNAIL whose expansion lies on the C = 10 family (g4 omega0 / g3^2 = 20/69,
// i.e. cbar4 cbar2 / cbar3^2 = 15/69) with E_J tuned so that K^(2)/omega0 =
// K_target (K^(2) scales as hbar^2, i.e. as sqrt(E_C / E_J)).
model::SnailParams snail_with_kerr(double K_target) {
    model::SnailParams sp;
    sp.alpha = 0.1;
    sp.m = 3;
    sp.M = 2;
    sp.xi_J = 8.0;
    sp.E_C = 1.0;
    sp.E_J = 100.0;
    auto family_gap = [&](double f) {
        model::SnailParams t = sp;
        t.phi_ext = f * 2.0 * std::numbers::pi;
        const auto c = model::snail_coefficients(t);
        return c.cbar[4] * c.cbar[2] / (c.cbar[3] * c.cbar[3]) - 15.0 / 69.0;
    };
    sp.phi_ext = find_root(family_gap, 0.35, 0.38) * 2.0 * std::numbers::pi;
    for (int i = 0; i < 8; ++i) {
        const model::OscillatorParams o = model::snail_coefficients(sp).oscillator;
        const double K = model::second_order_kerr(o) / o.omega0;
        sp.E_J *= (K / K_target) * (K / K_target);
    }
    return sp;
}
}  // namespace

TEST(Dynamics, RhsMatchesHamiltonianGradient) {
    ClassicalParams cp = table_point(2.91e-4, 80.0);
    const double h = 1e-5;
    for (double t : {0.0, 0.37, 2.1}) {
        for (auto [q, p] : {std::pair{0.3, -1.2}, std::pair{-4.0, 2.5}, std::pair{7.5, 0.1}}) {
            const auto f = hamilton_rhs(t, q, p, cp);
            const double dhdp = (h_cl(t, q, p + h, cp) - h_cl(t, q, p - h, cp)) / (2 * h);
            const double dhdq = (h_cl(t, q + h, p, cp) - h_cl(t, q - h, p, cp)) / (2 * h);
            EXPECT_NEAR(f[0], dhdp, 1e-6 * (1 + std::abs(dhdp)));
            EXPECT_NEAR(f[1], -dhdq, 1e-6 * (1 + std::abs(dhdq)));
        }
    }
}

TEST(Dynamics, UndrivenEnergyConserved) {
    ClassicalParams cp = table_point(2.91e-4, 80.0);
    cp.Omega_d = 0.0;
    const PhasePoint ic{3.0, -2.0};
    const Trajectory tr = integrate(ic, cp, 0.0, 100 * cp.drive_period(), cp.drive_period());
    ASSERT_FALSE(tr.escaped);
    const double e0 = h0(ic.q, ic.p, cp);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) worst = std::max(worst, std::abs(h0(tr.q[k], tr.p[k], cp) / e0 - 1.0));
    // within 10 x tolerance per period; the non-symplectic stepper drifts slowly beyond that
    EXPECT_LT(std::abs(h0(tr.q[1], tr.p[1], cp) / e0 - 1.0), 10.0 * IntegratorSettings{}.rel_tol);
    EXPECT_LT(worst, 1e-8);
}

TEST(Dynamics, DrivenLinearClosedForm) {
    ClassicalParams cp;
    cp.omega_d = kWd;
    cp.Omega_d = 0.7;
    cp.t0 = 0.3;
    const double w0 = cp.omega0, wd = cp.omega_d;
    // q'' + w0^2 q = -sqrt2 Omega wd sin(wd (t + t0))
    const double A = std::numbers::sqrt2 * cp.Omega_d * wd / (wd * wd - w0 * w0);
    const double q0 = 1.1, p0 = -0.4;
    const double c1 = q0 - A * std::sin(wd * cp.t0);
    const double qdot0 = w0 * p0 + std::numbers::sqrt2 * cp.Omega_d * std::cos(wd * cp.t0);
    const double c2 = (qdot0 - A * wd * std::cos(wd * cp.t0)) / w0;
    auto q_exact = [&](double t) { return A * std::sin(wd * (t + cp.t0)) + c1 * std::cos(w0 * t) + c2 * std::sin(w0 * t); };
    auto p_exact = [&](double t) {
        const double qd = A * wd * std::cos(wd * (t + cp.t0)) - c1 * w0 * std::sin(w0 * t) + c2 * w0 * std::cos(w0 * t);
        return (qd - std::numbers::sqrt2 * cp.Omega_d * std::cos(wd * (t + cp.t0))) / w0;
    };
    const Trajectory tr = integrate({q0, p0}, cp, 0.0, 10 * cp.drive_period(), 0.25);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        EXPECT_NEAR(tr.q[k], q_exact(tr.t[k]), 1e-8);
        EXPECT_NEAR(tr.p[k], p_exact(tr.t[k]), 1e-8);
    }
    EXPECT_DOUBLE_EQ(tr.t.back(), 10 * cp.drive_period());
}

TEST(Dynamics, TimeReversalReturnsToStart) {
    ClassicalParams cp = table_point(2.91e-4, 80.0);
    const PhasePoint ic{2.0, 1.0};
    const double T = 20 * cp.drive_period();
    const Trajectory fwd = integrate(ic, cp, 0.0, T, T);
    ASSERT_FALSE(fwd.escaped);
    const Trajectory back = integrate({fwd.q.back(), fwd.p.back()}, cp, T, 0.0, T);
    EXPECT_NEAR(back.q.back(), ic.q, 1e-7);
    EXPECT_NEAR(back.p.back(), ic.p, 1e-7);
}

TEST(Dynamics, EscapeDetected) {
    ClassicalParams cp = table_point(2.91e-4, 80.0);
    const double R = default_escape_radius(cp);
    const Trajectory tr = integrate({-0.9 * R, 0.0}, cp, 0.0, 200 * cp.drive_period(), cp.drive_period());
    // started beyond the saddle on the deep side: falls into the outer well, far past 3|d+|
    EXPECT_TRUE(tr.escaped);
    EXPECT_TRUE(std::isfinite(tr.escape_time));
}

TEST(Tangent, PeriodMapIsSymplectic) {
    ClassicalParams cp = table_point(8.33e-4, 80.0);
    const model::DerivedScales s = scales_of(8.33e-4, 80.0);
    for (PhasePoint ic : {PhasePoint{s.center_offset(), 0.0}, PhasePoint{s.center_offset() + 3.0, 1.0}}) {
        const auto m = period_tangent_map(ic, cp);
        EXPECT_NEAR(m[0] * m[3] - m[1] * m[2], 1.0, 1e-6);
    }
}

TEST(Tangent, MatchesFiniteDifferenceOfFlow) {
    ClassicalParams cp = table_point(2.91e-4, 80.0);
    const PhasePoint ic{1.5, -0.5};
    const auto m = period_tangent_map(ic, cp);
    const double T = cp.drive_period(), h = 1e-6;
    auto flow = [&](PhasePoint x) {
        const Trajectory tr = integrate(x, cp, 0.0, T, T);
        return PhasePoint{tr.q.back(), tr.p.back()};
    };
    for (int c = 0; c < 2; ++c) {
        PhasePoint a = ic, b = ic;
        (c == 0 ? a.q : a.p) += h;
        (c == 0 ? b.q : b.p) -= h;
        const PhasePoint fa = flow(a), fb = flow(b);
        EXPECT_NEAR(m[c], (fa.q - fb.q) / (2 * h), 1e-5);
        EXPECT_NEAR(m[2 + c], (fa.p - fb.p) / (2 * h), 1e-5);
    }
}

TEST(Lyapunov, HarmonicIsZero) {
    ClassicalParams cp;
    cp.omega_d = kWd;
    cp.Omega_d = 0.2;
    LyapunovOptions opt;
    opt.n_periods = 500;
    const LyapunovResult r = lyapunov({0.5, 0.0}, cp, opt);
    EXPECT_FALSE(r.escaped);
    // linear flow: the tangent norm stays bounded, so the estimate decays like 1/t
    EXPECT_LT(std::abs(r.raw), 5.0 / (opt.n_periods * cp.drive_period()));
}

TEST(Lyapunov, RegularAtWellOfPointA) {
    ClassicalParams cp = table_point(0.53e-4, 8.5);
    const model::DerivedScales s = scales_of(0.53e-4, 8.5);
    LyapunovOptions opt;
    const double cut = chaos_cutoff(regular_floor(cp, opt), 1e-3);
    const LyapunovResult r = lyapunov({s.center_offset() + s.focal_distance(), 0.0}, cp, opt);
    EXPECT_FALSE(r.escaped);
    EXPECT_LT(r.lambda, cut);
}

TEST(Lyapunov, ChaoticNearCentreOfPointE) {
    ClassicalParams cp = table_point(8.33e-4, 80.0);
    const model::DerivedScales s = scales_of(8.33e-4, 80.0);
    LyapunovOptions opt;
    const double cut = chaos_cutoff(regular_floor(cp, opt), 1e-3);
    const LyapunovResult r = lyapunov({s.center_offset() + 0.3, 0.2}, cp, opt);
    EXPECT_TRUE(r.escaped || r.lambda > cut) << "lambda " << r.lambda << " cutoff " << cut;
}

TEST(Poincare, HarmonicOrbitStaysOnCircle) {
    ClassicalParams cp;
    cp.omega_d = 2.0;
    const auto orbits = poincare_section({{1.0, 0.0}, {0.0, 2.0}}, cp, 50);
    ASSERT_EQ(orbits.size(), 2u);
    for (const auto& o : orbits) {
        ASSERT_EQ(o.points.size(), 51u);
        const double r0 = std::hypot(o.points[0].q, o.points[0].p);
        for (const auto& pt : o.points) EXPECT_NEAR(std::hypot(pt.q, pt.p), r0, 1e-8);
    }
}

TEST(Critical, StaticFixedPointsClassified) {
    ClassicalParams cp = table_point(2.91e-4, 80.0);
    const CriticalPointSet s = critical_points(cp);
    ASSERT_FALSE(s.single_well);
    ASSERT_EQ(s.points.size(), 3u);
    for (const auto& c : s.points) EXPECT_NEAR(potential_slope(c.point.q, cp), 0.0, 1e-9);
    EXPECT_EQ(s.points[0].stability, Stability::center);
    EXPECT_NEAR(s.points[0].frequency, cp.omega0, 1e-14);
    EXPECT_EQ(s.points[1].stability, Stability::center);
    EXPECT_EQ(s.points[2].stability, Stability::hyperbolic);
    EXPECT_LT(std::abs(s.points[2].point.q), std::abs(s.points[1].point.q));

    ClassicalParams quartic;
    quartic.g4 = 0.01;
    EXPECT_TRUE(critical_points(quartic).single_well);
}

TEST(Lemniscate, AreaAndFocalProperty) {
    const model::DerivedScales s = scales_of(2.91e-4, 80.0);
    const Lemniscate L = lemniscate(s, 4000);
    EXPECT_NEAR(L.area, 4.0 * s.Gamma, 1e-12);
    EXPECT_NEAR(L.area_quadrature / L.area, 1.0, 1e-3);
    const double c = L.focal;
    for (const auto* lobe : {&L.right, &L.left}) {
        for (std::size_t k = 0; k < lobe->size(); k += 97) {
            const PhasePoint pt = (*lobe)[k];
            const double x = pt.q - L.center.q, y = pt.p - L.center.p;
            // product of distances to the foci equals c^2 on a Bernoulli lemniscate
            EXPECT_NEAR(std::hypot(x - c, y) * std::hypot(x + c, y), c * c, 1e-9 * c * c);
        }
    }
}

TEST(Threshold, SeparatrixBoxEndpointsOnSaddleEnergy) {
    ClassicalParams cp = table_point(4e-4, 50.0);
    const SeparatrixBox b = static_separatrix_box(cp);
    const CriticalPointSet s = critical_points(cp);
    const double e = h0(s.points[2].point.q, 0.0, cp);
    EXPECT_NEAR(h0(b.q_min, 0.0, cp) / e, 1.0, 1e-9);
    EXPECT_NEAR(h0(b.q_max, 0.0, cp) / e, 1.0, 1e-9);
    EXPECT_NEAR(h0(0.0, b.p_max, cp) / e, 1.0, 1e-12);
    EXPECT_LT(b.q_min, 0.0);
    EXPECT_GT(b.q_max, 0.0);
}

TEST(Threshold, FloodFillConnectivity) {
    const int n = 7;
    SeparatrixBox box{0.0, 6.0, 0.0, 6.0};
    std::vector<char> mask(n * n, 0);
    auto set = [&](int i, int j) { mask[j * n + i] = 1; };
    set(3, 3);
    set(4, 3);
    set(5, 3);
    EXPECT_FALSE(ThresholdRay::centre_reaches_boundary(mask, n, box, {3.0, 3.0}));
    set(6, 3);
    EXPECT_TRUE(ThresholdRay::centre_reaches_boundary(mask, n, box, {3.0, 3.0}));
    // diagonal contact does not connect
    std::vector<char> diag(n * n, 0);
    diag[3 * n + 3] = diag[4 * n + 4] = diag[5 * n + 5] = diag[6 * n + 6] = 1;
    EXPECT_FALSE(ThresholdRay::centre_reaches_boundary(diag, n, box, {3.0, 3.0}));
    std::vector<char> none(n * n, 0);
    EXPECT_FALSE(ThresholdRay::centre_reaches_boundary(none, n, box, {3.0, 3.0}));
}

TEST(Threshold, BisectionFindsStepAndRejectsBadBracket) {
    int evals = 0;
    const double g = bisect_onset([](double x) { return x > 42.3; }, 30.0, 100.0, 0.01, &evals);
    EXPECT_NEAR(g, 42.3, 0.01);
    EXPECT_GT(evals, 2);
    EXPECT_THROW(bisect_onset([](double) { return true; }, 30.0, 100.0, 0.1), RangeError);
    EXPECT_THROW(bisect_onset([](double) { return false; }, 30.0, 100.0, 0.1), RangeError);
}

TEST(Threshold, RayHoldsKFixed) {
    ThresholdOptions opt;
    ThresholdRay ray(opt);
    const RayPoint a = ray.at(40.0), b = ray.at(80.0);
    EXPECT_DOUBLE_EQ(a.quantum.g3, b.quantum.g3);
    EXPECT_NEAR(b.gamma_K / a.gamma_K, 2.0, 1e-12);
    const double K = model::kerr_nonlinearity_auto(a.quantum).K;
    EXPECT_NEAR(a.gamma_K, 40.0 * K, 1e-9);
}

TEST(FullSnail, TaylorConsistencyNearMinimum) {
    // the quintic remainder relative to the linear force at 0.05 |d+| depends
    // only on the circuit shape; this one has positive g4 and a nearby saddle
    model::SnailParams sp;
    sp.alpha = 0.29;
    sp.m = 3;
    sp.phi_ext = 0.45 * 2.0 * std::numbers::pi;
    sp.M = 3;
    sp.E_J = 1000.0;
    const FullSnailFlow flow(sp, 0.0, 2.0);
    const ClassicalParams cp = flow.quartic();
    ASSERT_TRUE(cp.has_double_well());
    const double d_plus = critical_points(cp).points[2].point.q;
    for (double frac : {-0.05, -0.03, -0.01, 0.01, 0.03, 0.05}) {
        const double X = frac * std::abs(d_plus);
        const auto full = flow.rhs(0.1, X, 0.4);
        const auto quart = hamilton_rhs(0.1, X, 0.4, cp);
        EXPECT_NEAR(full[0], quart[0], 1e-12);
        EXPECT_NEAR(full[1] / quart[1], 1.0, 1e-3) << "X = " << X;
    }
}

TEST(FullSnail, PotentialMatchesQuarticOverLemniscateBox) {
    const model::SnailParams sp = snail_with_kerr(0.53e-4);
    model::OscillatorParams o = model::snail_coefficients(sp).oscillator;
    o.omega_d = kWd * o.omega0;
    const double K = model::kerr_nonlinearity_auto(o).K;
    // drive for Gamma = 8.5 on this circuit
    const double Pi = 8.5 * K / o.g3;
    o.Omega_d = Pi * (o.omega_d * o.omega_d - o.omega0 * o.omega0) / o.omega_d;
    const model::DerivedScales s = model::derived_scales(o, K);
    const FullSnailFlow flow(sp, o.Omega_d, o.omega_d);
    const ClassicalParams cp = flow.quartic();
    const double half = std::sqrt(4.0 * s.Gamma);
    double worst = 0.0, scale = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double X = s.center_offset() - half + 2.0 * half * k / 200;
        const double vq = h0(X, 0.0, cp);
        worst = std::max(worst, std::abs(flow.potential(X) - vq));
        scale = std::max(scale, std::abs(vq));
    }
    EXPECT_LT(worst / scale, 1e-2);
}

TEST(FullSnail, SymmetricFluxFlowIsOdd) {
    model::SnailParams sp;
    sp.alpha = 0.29;
    sp.m = 3;
    sp.phi_ext = 0.0;
    sp.M = 3;
    sp.xi_J = 5.0;
    sp.E_J = 200.0;
    const FullSnailFlow flow(sp, 0.3, 2.0 * model::snail_coefficients(sp).oscillator.omega0);
    const double half = 0.5 * flow.drive_period();
    for (double t : {0.0, 0.4, 1.3}) {
        for (auto [X, P] : {std::pair{0.7, -0.2}, std::pair{-2.5, 1.1}, std::pair{4.0, 3.0}}) {
            const auto a = flow.rhs(t, X, P);
            const auto b = flow.rhs(t + half, -X, -P);
            EXPECT_NEAR(b[0], -a[0], 1e-12 * (1 + std::abs(a[0])));
            EXPECT_NEAR(b[1], -a[1], 1e-10 * (1 + std::abs(a[1])));
        }
    }
}

TEST(FullSnail, IntegratesWithOdeint) {
    const model::SnailParams sp = snail_with_kerr(2.91e-4);
    const FullSnailFlow flow(sp, 0.0, kWd);
    std::array<double, 2> x{1.0, 0.0};
    double dt = 0.0;
    IntegratorSettings s;
    s.escape_radius = -1.0;
    FullSnailFlow sys = flow;
    const double e0 = 0.5 * flow.quartic().omega0 * x[1] * x[1] + flow.potential(x[0]);
    const AdvanceResult r = advance(sys, x, 0.0, 20 * flow.drive_period(), dt, s);
    ASSERT_FALSE(r.escaped);
    const double e1 = 0.5 * flow.quartic().omega0 * x[1] * x[1] + flow.potential(x[0]);
    EXPECT_NEAR(e1 / e0, 1.0, 1e-7);
}
