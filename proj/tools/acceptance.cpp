// Acceptance checks: one PASS/FAIL line per criterion. Run with no arguments
// for all of them, or name the criteria to run (see --list).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kpo/classical/lemniscate.hpp"
#include "kpo/classical/threshold.hpp"
#include "kpo/cli/validate.hpp"
#include "kpo/maps/chaos_map.hpp"
#include "kpo/maps/disintegration.hpp"
#include "kpo/maps/pipeline.hpp"

using namespace kpo;

namespace {

constexpr double kDriveRatio = 1.999866;

struct Point {
    const char* name;
    double K_over_w0;
    double Gamma;
    double n_min;
    double focal_ratio;   // sqrt(2 Gamma) / |d+|
    double center_ratio;  // sqrt2 Pi / |d+|
};

// the six reference points
const std::vector<Point> kPoints = {
    {"A", 0.53e-4, 8.5, 8.079, 0.04122, 0.00148492},  {"B", 5.02e-4, 8.5, 7.249, 0.141397, 0.0157244},
    {"C", 0.53e-4, 80.0, 77.007, 0.12647, 0.0140573}, {"D", 2.91e-4, 80.0, 66.134, 0.29577, 0.0769191},
    {"E", 8.33e-4, 80.0, 197.924, 0.49995, 0.219769}, {"F", 25e-4, 80.0, 336.598, 0.86594, 0.659321},
};

const Point& point(const std::string& n) {
    for (const auto& p : kPoints)
        if (n == p.name) return p;
    throw std::out_of_range(n);
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok) { pass = pass && ok; }
};

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v, int prec = 6) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*g", prec, v);
    return b;
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

// round to `sig` significant figures
double sig_round(double v, int sig) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double scale = std::pow(10.0, sig - 1 - static_cast<int>(std::floor(std::log10(std::abs(v)))));
    return std::round(v * scale) / scale;
}

maps::PipelineOptions pipeline() {
    maps::PipelineOptions o;
    o.propagator.workers = workers();
    return o;
}

void table1(Outcome& out, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        const Point& p = point(n);
        const maps::CatPoint cp = maps::cat_point(p.K_over_w0, p.Gamma, pipeline(), false);
        const double e = rel(cp.cat.n_min, p.n_min);
        const bool ok = e <= 0.05;
        out.require(ok);
        out.detail << " " << n << " n_min=" << fmt(cp.cat.n_min, 5) << " (ref " << p.n_min << ", " << fmt(100 * e, 3)
                   << "%, N=" << cp.N << (cp.converged ? "" : ", unconverged") << ")" << (ok ? "" : " x");
    }
}

Outcome table1_core() {
    Outcome o;
    table1(o, {"A", "C", "D"});
    return o;
}

Outcome table1_extended() {
    Outcome o;
    table1(o, {"B", "E", "F"});
    return o;
}

Outcome kerr_calibration() {
    Outcome o;
    model::OscillatorParams p;
    p.g3 = 25.7371 / 6000.0;
    p.g4 = model::g4_for_family(p.g3, 10.0);
    p.omega_d = kDriveRatio;
    const double K = model::kerr_nonlinearity_auto(p).K;
    const double e = rel(K, 0.32 / 6000.0);
    o.require(e <= 0.02);
    o.detail << " K/w0=" << fmt(K) << " target " << fmt(0.32 / 6000.0) << " (" << fmt(100 * e, 3) << "%)";
    return o;
}

Outcome spacing_calibration() {
    Outcome o;
    std::vector<double> fence;
    for (int j = 0; j < 1000; ++j) fence.push_back(0.123 + 2.0 * std::numbers::pi * j / 1000.0);
    const double r_fence = floquet::spacing_ratio_on_circle(fence, 2.0 * std::numbers::pi).r_tilde;
    o.require(std::abs(r_fence - 1.0) <= 1e-12);

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    std::vector<double> v(100000);
    for (double& x : v) x = u(rng);
    const double r_poisson = floquet::spacing_ratio_on_circle(v, 2.0 * std::numbers::pi).r_tilde;
    o.require(std::abs(r_poisson - 0.386) <= 0.005);

    const floquet::RatioReferences ref;
    auto norm = [&](double r) { return (r - ref.poisson) / (ref.coe - ref.poisson); };
    o.require(std::abs(norm(0.39)) <= 1e-12 && std::abs(norm(0.53) - 1.0) <= 1e-12);
    o.detail << " fence r~=" << fmt(r_fence, 15) << " poisson r~=" << fmt(r_poisson, 5) << " endpoints "
             << fmt(norm(0.39)) << "," << fmt(norm(0.53));
    return o;
}

maps::MapCell map_cell(const Point& p) {
    maps::ChaosMapSpec spec;
    spec.K_values = {p.K_over_w0};
    spec.Gamma_values = {p.Gamma};
    spec.pipeline = pipeline();
    spec.workers = 1;
    return maps::chaos_map(spec).cells.front();
}

void describe(Outcome& o, const maps::MapCell& c) {
    o.detail << " r_bar=" << fmt(c.r_bar, 4) << " r~=" << fmt(c.r_tilde, 4) << " levels=" << c.levels << " N=" << c.N
             << (c.valid ? "" : " invalid") << (c.message.empty() ? "" : " " + c.message);
}

Outcome chaos_map_A() {
    Outcome o;
    const maps::MapCell c = map_cell(point("A"));
    o.require(c.valid && c.r_bar < 0.2);
    describe(o, c);
    return o;
}

Outcome chaos_map_F() {
    Outcome o;
    const maps::MapCell c = map_cell(point("F"));
    o.require(c.valid && c.r_bar > 0.8);
    describe(o, c);
    return o;
}

classical::ThresholdOptions threshold_opts() {
    classical::ThresholdOptions t;
    t.workers = workers();
    return t;
}

Outcome threshold_inner() {
    Outcome o;
    const auto r = classical::threshold_scan(threshold_opts(), true, false);
    const double e = rel(r.inner.gamma_K, 0.0187);
    o.require(e <= 0.10);
    o.detail << " Gamma K/w0=" << fmt(r.inner.gamma_K, 4) << " ref 0.0187 (" << fmt(100 * e, 3) << "%)";
    return o;
}

Outcome threshold_merge() {
    Outcome o;
    const auto r = classical::threshold_scan(threshold_opts(), false, true);
    const double e = rel(r.merge.gamma_K, 0.03347);
    o.require(e <= 0.10);
    o.detail << " Gamma K/w0=" << fmt(r.merge.gamma_K, 4) << " ref 0.03347 (" << fmt(100 * e, 3) << "%)";
    return o;
}

// Not a headline number: the inner estimate must not drift with the
// integration horizon or tolerance.
Outcome threshold_inner_stability() {
    Outcome o;
    const classical::ThresholdOptions base = threshold_opts();
    classical::ThresholdOptions longer = base, tighter = base;
    longer.lyap.n_periods *= 2;
    tighter.lyap.integrator.rel_tol *= 0.5;
    tighter.lyap.integrator.abs_tol *= 0.5;
    const double g0 = classical::threshold_scan(base, true, false).inner.gamma_K;
    const double g1 = classical::threshold_scan(longer, true, false).inner.gamma_K;
    const double g2 = classical::threshold_scan(tighter, true, false).inner.gamma_K;
    o.require(rel(g1, g0) < 0.02 && rel(g2, g0) < 0.02);
    o.detail << " base " << fmt(g0, 4) << " 2x periods " << fmt(g1, 4) << " half tolerance " << fmt(g2, 4);
    return o;
}

Outcome lemniscate_geometry() {
    Outcome o;
    double worst_area = 0.0, worst_nin = 0.0;
    for (const auto& p : kPoints) {
        const maps::PointSetup s = maps::point_setup(p.K_over_w0, p.Gamma, pipeline());
        const classical::Lemniscate L = classical::lemniscate(s.scales);
        worst_area = std::max(worst_area, rel(L.area_quadrature, 4.0 * s.scales.Gamma));
        worst_nin = std::max(worst_nin, rel(L.n_in, 2.0 * s.scales.Gamma / std::numbers::pi));
    }
    o.require(worst_area <= 1e-3 && worst_nin <= 1e-12);
    o.detail << " worst area error " << fmt(worst_area, 3) << ", worst n_in error " << fmt(worst_nin, 3);
    return o;
}

// Geometry ratios to 4 significant figures. The tables use K^(2) for Gamma.
Outcome table_s1() {
    Outcome o;
    maps::PipelineOptions po = pipeline();
    po.convention = model::KerrConvention::second_order;
    for (const auto& p : kPoints) {
        const model::DerivedScales s = maps::point_setup(p.K_over_w0, p.Gamma, po).scales;
        const double f = s.focal_distance() / std::abs(s.d_plus);
        const double c = s.center_offset() / std::abs(s.d_plus);
        const bool ok = sig_round(f, 4) == sig_round(p.focal_ratio, 4) && sig_round(c, 4) == sig_round(p.center_ratio, 4);
        o.require(ok);
        o.detail << " " << p.name << " " << fmt(f, 6) << "/" << fmt(c, 6) << " (" << fmt(100 * (f / p.focal_ratio - 1), 2)
                 << "%/" << fmt(100 * (c / p.center_ratio - 1), 2) << "%)" << (ok ? "" : " x");
    }
    return o;
}

Outcome property_suites() {
    Outcome o;
    for (const auto& c : cli::run_invariants(1.0)) {
        o.require(c.pass);
        if (!c.pass) o.detail << " " << c.name << "=" << fmt(c.value, 3) << " x";
    }
    if (o.pass) o.detail << " all invariants within tolerance";
    return o;
}

Outcome disintegration_monotonicity() {
    Outcome o;
    maps::DisintegrationOptions d;
    d.pipeline = pipeline();
    d.entropy = false;
    const std::vector<double> K = {0.33e-4, 1e-4, 2e-4, 2.91e-4, 3.66e-4, 5e-4, 8.66e-4, 12e-4};
    const maps::DisintegrationScan s = maps::disintegration_scan(80.0, K, d);
    bool down = true, up = true;
    const maps::DisintegrationRow* prev = nullptr;
    for (const auto& r : s.rows) {
        o.require(!r.failed);
        if (prev && maps::DisintegrationScan::is_chaotic(*prev) == maps::DisintegrationScan::is_chaotic(r)) {
            if (maps::DisintegrationScan::is_chaotic(r))
                up = up && r.n_min > prev->n_min;
            else
                down = down && r.n_min < prev->n_min;
        }
        prev = &r;
        o.detail << " " << fmt(r.K_over_w0 * 1e4, 3) << ":" << fmt(r.n_min, 4)
                 << (maps::DisintegrationScan::is_chaotic(r) ? "c" : "") << (r.converged ? "" : "u");
    }
    // across the boundary the first chaotic row sits above the last regular one
    for (std::size_t k = 1; k < s.rows.size(); ++k)
        if (!maps::DisintegrationScan::is_chaotic(s.rows[k - 1]) && maps::DisintegrationScan::is_chaotic(s.rows[k]))
            up = up && s.rows[k].n_min > s.rows[k - 1].n_min;
    o.require(down && up && s.label_flips() == 1);
    o.detail << " (c chaotic label, u unconverged) flips=" << s.label_flips() << (down ? "" : " regular branch not decreasing")
             << (up ? "" : " chaotic branch not increasing");
    return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria = {
    {"table1_core", table1_core},
    {"table1_extended", table1_extended},
    {"kerr_calibration", kerr_calibration},
    {"spacing_calibration", spacing_calibration},
    {"chaos_map_point_A", chaos_map_A},
    {"chaos_map_point_F", chaos_map_F},
    {"threshold_inner", threshold_inner},
    {"threshold_merge", threshold_merge},
    {"threshold_inner_stability", threshold_inner_stability},
    {"lemniscate_geometry", lemniscate_geometry},
    {"table_s1", table_s1},
    {"property_suites", property_suites},
    {"disintegration_monotonicity", disintegration_monotonicity},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> want(argv + 1, argv + argc);
    if (want.size() == 1 && want[0] == "--list") {
        for (const auto& [name, f] : kCriteria) std::cout << name << "\n";
        return 0;
    }
    for (const auto& w : want) {
        bool known = false;
        for (const auto& [name, f] : kCriteria) known = known || name == w;
        if (!known) {
            std::cerr << "unknown criterion " << w << " (see --list)\n";
            return 2;
        }
    }
    int failed = 0;
    for (const auto& [name, f] : kCriteria) {
        if (!want.empty() && std::find(want.begin(), want.end(), name) == want.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " error: " << e.what();
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ":" << o.detail.str() << " [" << fmt(sec, 3) << " s]"
                  << std::endl;
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
