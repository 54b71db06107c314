#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "kpo/maps/persist.hpp"

using namespace kpo;
using namespace kpo::maps;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "kpo_test_maps";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// bitwise equality that treats nan == nan
bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_cells(const ChaosMapGrid& a, const ChaosMapGrid& b) {
    if (a.cells.size() != b.cells.size()) return false;
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
        const MapCell &x = a.cells[k], &y = b.cells[k];
        if (!same(x.K_over_w0, y.K_over_w0) || !same(x.Gamma, y.Gamma) || !same(x.gamma_K, y.gamma_K) ||
            x.N != y.N || x.levels != y.levels || !same(x.r_tilde, y.r_tilde) || !same(x.r_bar, y.r_bar) ||
            x.valid != y.valid || x.flags != y.flags || x.message != y.message || !same(x.n_min, y.n_min) ||
            !same(x.cat_quality, y.cat_quality) || !same(x.lambda_median, y.lambda_median) ||
            !same(x.lambda_cutoff, y.lambda_cutoff) || x.lyapunov_chaotic != y.lyapunov_chaotic || x.seed != y.seed)
            return false;
    }
    return true;
}

ChaosMapGrid toy_grid() {
    ChaosMapGrid g;
    g.K_values = {1e-5, 1.0 / 3.0 * 1e-4, 1e-4};
    g.Gamma_values = {5.0, 8.5, 100.0 / 7.0};
    g.cells.resize(9);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            MapCell& c = g.cell(i, j);
            c.K_over_w0 = g.K_values[i];
            c.Gamma = g.Gamma_values[j];
            c.gamma_K = c.K_over_w0 * c.Gamma;
            c.N = 64 + i + 10 * j;
            c.levels = 50 + i;
            c.r_tilde = 0.39 + 0.01 * i + std::numbers::pi * 1e-9 * j;
            c.r_bar = (c.r_tilde - 0.39) / 0.14;
            c.valid = (i + j) % 2 == 0;
            c.flags = c.valid ? cell_ok : cell_low_count;
            c.seed = cell_seed(7, i, j);
        }
    g.cell(1, 1).r_tilde = g.cell(1, 1).r_bar = std::nan("");
    g.cell(1, 1).flags = cell_failed;
    g.cell(1, 1).message = "range: target \"K\" unreachable, C = 10";
    g.cell(2, 2).lambda_median = std::numeric_limits<double>::infinity();
    g.cell(2, 2).lyapunov_chaotic = 1;
    return g;
}

Provenance toy_provenance() {
    Provenance p;
    p.subcommand = "chaos-map";
    p.config = {{"map", {{"k_min", 1e-5}, {"k_max", 1e-4}}}};
    p.settings = settings_json(PipelineOptions{});
    return p;
}

PipelineOptions fast_pipeline() {
    PipelineOptions o;
    o.spacing_min_dim = 64;
    o.stats_floor = 10;
    return o;
}

}  // namespace

TEST(Pipeline, DimensionRule) {
    PipelineOptions o;
    EXPECT_EQ(initial_dim(5.0, o), 64);
    EXPECT_EQ(initial_dim(8.5, o), 68);
    EXPECT_EQ(initial_dim(80.0, o), 640);
    EXPECT_EQ(initial_dim(1000.0, o), 1600);
}

TEST(Pipeline, PointACatDiagnostics) {
    const CatPoint cp = cat_point(0.53e-4, 8.5, PipelineOptions{});
    EXPECT_EQ(cp.N, 68);
    EXPECT_TRUE(cp.converged);
    EXPECT_NEAR(cp.cat.n_min / 8.079, 1.0, 0.05);
    EXPECT_NEAR(cp.setup.scales.Gamma, 8.5, 1e-5);
    // a two-blob state carries more phase-space entropy than one coherent state
    EXPECT_GT(cp.S_min, (1.0 + std::log(std::numbers::pi)) / std::numbers::pi);
    EXPECT_FALSE(cp.wide_grid);
}

TEST(Pipeline, SpacingPointBelowFloorIsInvalidNotZero) {
    PipelineOptions o = fast_pipeline();
    o.stats_floor = 100000;
    const SpacingPoint sp = spacing_point(0.53e-4, 8.5, o);
    EXPECT_FALSE(sp.valid);
    EXPECT_TRUE(std::isfinite(sp.stats.r_bar));
    EXPECT_GT(sp.stats.count, 2);
}

TEST(ChaosMap, CellSeedsAreStableAndDistinct) {
    EXPECT_EQ(cell_seed(1, 2, 3), cell_seed(1, 2, 3));
    EXPECT_NE(cell_seed(1, 2, 3), cell_seed(1, 3, 2));
    EXPECT_NE(cell_seed(1, 2, 3), cell_seed(2, 2, 3));
}

TEST(ChaosMap, RegimeFromHyperbolas) {
    ThresholdConstants t;
    EXPECT_EQ(regime_of(0.01, t), Regime::regular);
    EXPECT_EQ(regime_of(0.02, t), Regime::mixed);
    EXPECT_EQ(regime_of(0.04, t), Regime::chaotic);
    EXPECT_DOUBLE_EQ(ThresholdConstants::gamma_on(0.03347, 4e-4), 0.03347 / 4e-4);
}

TEST(ChaosMap, WorkerCountDoesNotChangeTheGrid) {
    ChaosMapSpec spec;
    spec.K_values = {0.5e-4, 1e-4};
    spec.Gamma_values = {5.0, 7.0};
    spec.pipeline = fast_pipeline();
    spec.with_cat = true;
    spec.with_lyapunov = true;
    spec.classical.lyap.n_periods = 200;
    spec.classical.probe_count = 5;
    spec.workers = 1;
    const ChaosMapGrid serial = chaos_map(spec);
    spec.workers = 3;
    const ChaosMapGrid parallel = chaos_map(spec);
    EXPECT_TRUE(same_cells(serial, parallel));
    for (const MapCell& c : serial.cells) {
        EXPECT_EQ(c.flags & cell_failed, 0u) << c.message;
        EXPECT_EQ(c.lyapunov_chaotic, 0);  // Gamma K ~ 1e-3 is far below both thresholds
        EXPECT_NEAR(c.gamma_K, c.K_over_w0 * c.Gamma, 1e-6 * c.gamma_K);
    }
}

TEST(ChaosMap, FailingCellIsFlaggedAndMapCompletes) {
    ChaosMapSpec spec;
    spec.K_values = {0.5e-4, 1e-4};
    spec.Gamma_values = {5.0};
    spec.pipeline = fast_pipeline();
    spec.pipeline.C = -10.0;  // needs g4 < 0, so every cell's setup throws
    const ChaosMapGrid g = chaos_map(spec);
    for (const MapCell& c : g.cells) {
        EXPECT_NE(c.flags & cell_failed, 0u);
        EXPECT_FALSE(c.valid);
        EXPECT_EQ(c.message.rfind("range: ", 0), 0u) << c.message;
    }
}

TEST(ChaosMap, RejectsBadAxes) {
    ChaosMapSpec spec;
    spec.Gamma_values = {5.0};
    EXPECT_THROW(chaos_map(spec), InvalidParameter);
    spec.K_values = {-1e-4};
    EXPECT_THROW(chaos_map(spec), InvalidParameter);
}

TEST(ChaosMap, Axes) {
    const auto v = ChaosMapSpec::log_axis(1e-6, 1e-4, 3);
    EXPECT_DOUBLE_EQ(v[0], 1e-6);
    EXPECT_NEAR(v[1], 1e-5, 1e-18);
    EXPECT_DOUBLE_EQ(v[2], 1e-4);
    const auto w = ChaosMapSpec::lin_axis(5, 100, 20);
    EXPECT_DOUBLE_EQ(w.front(), 5);
    EXPECT_DOUBLE_EQ(w.back(), 100);
}

TEST(ChaosMap, ThresholdViolationCount) {
    ChaosMapGrid g = toy_grid();
    for (auto& c : g.cells) c.valid = false;
    MapCell& bad = g.cell(0, 0);
    bad.valid = true;
    bad.gamma_K = 0.05;
    bad.r_bar = 0.1;
    MapCell& good = g.cell(1, 0);
    good.valid = true;
    good.gamma_K = 0.05;
    good.r_bar = 0.9;
    EXPECT_DOUBLE_EQ(threshold_violations(g), 0.5);
}

TEST(Disintegration, LabelsAndPointValues) {
    DisintegrationOptions o;
    o.entropy = false;
    // B before A on purpose: rows come back sorted by K
    const DisintegrationScan s = disintegration_scan(8.5, {5.02e-4, 0.53e-4}, o);
    ASSERT_EQ(s.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(s.rows[0].K_over_w0, 0.53e-4);
    EXPECT_NEAR(s.rows[0].n_min / 8.079, 1.0, 0.05);
    EXPECT_NEAR(s.rows[1].n_min / 7.249, 1.0, 0.05);
    EXPECT_TRUE(s.rows[0].converged);
    EXPECT_FALSE(s.rows[0].disintegrated);
    EXPECT_EQ(s.rows[0].regime, Regime::regular);
    EXPECT_EQ(s.label_flips(), 0);

    o.thresholds.inner = 1e-3;
    o.thresholds.merge = 2e-3;  // moves the boundary between the two points
    const DisintegrationScan t = disintegration_scan(8.5, {0.53e-4, 5.02e-4}, o);
    EXPECT_EQ(t.rows[1].regime, Regime::chaotic);
    EXPECT_EQ(t.label_flips(), 1);
}

TEST(Persist, ChaosMapRoundTrip) {
    const std::string path = temp_path("map.csv");
    const ChaosMapGrid g = toy_grid();
    save_chaos_map(g, path, toy_provenance());
    Provenance p;
    const ChaosMapGrid h = load_chaos_map(path, &p);
    EXPECT_TRUE(same_cells(g, h));
    EXPECT_EQ(h.K_values, g.K_values);
    EXPECT_EQ(h.Gamma_values, g.Gamma_values);
    EXPECT_EQ(h.C, g.C);
    EXPECT_EQ(h.omega_d_over_w0, g.omega_d_over_w0);
    EXPECT_EQ(h.thresholds.merge, g.thresholds.merge);
    EXPECT_EQ(p.subcommand, "chaos-map");
    EXPECT_EQ(p.config_hash, toy_provenance().hash());
    EXPECT_EQ(p.config, toy_provenance().config);
}

TEST(Persist, ProvenanceBlockIsComplete) {
    const std::string path = temp_path("prov.csv");
    save_chaos_map(toy_grid(), path, toy_provenance());
    const auto j = nlohmann::json::parse(slurp(sidecar_path(path)));
    for (const char* key : {"schema", "version", "code_version", "subcommand", "config_hash", "created", "config",
                            "settings", "data"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["schema"], "chaos-map");
    EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
    for (const char* key : {"magnus_steps", "tail_weight_max", "spacing_min_dim", "level_selection", "r_coe"})
        EXPECT_TRUE(j["settings"].contains(key)) << key;
    const std::string body = slurp(path);
    EXPECT_EQ(body.rfind("# kpo chaos-map v1\n# subcommand=chaos-map config_hash=" + j["config_hash"].get<std::string>(), 0),
              0u);
}

TEST(Persist, SameInputSameBytes) {
    const std::string a = temp_path("a.csv"), b = temp_path("b.csv");
    save_chaos_map(toy_grid(), a, toy_provenance());
    save_chaos_map(toy_grid(), b, toy_provenance());
    EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Persist, ForeignVersionIsAVersionError) {
    const std::string path = temp_path("ver.csv");
    save_chaos_map(toy_grid(), path, toy_provenance());
    std::string body = slurp(path);
    body.replace(body.find(" v1"), 3, " v2");
    spit(path, body);
    EXPECT_THROW(load_chaos_map(path), VersionError);

    save_chaos_map(toy_grid(), path, toy_provenance());
    auto j = nlohmann::json::parse(slurp(sidecar_path(path)));
    j["version"] = 9;
    spit(sidecar_path(path), j.dump());
    EXPECT_THROW(load_chaos_map(path), VersionError);
}

TEST(Persist, FuzzedHeaderIsRejected) {
    const std::string path = temp_path("fuzz.csv");
    save_chaos_map(toy_grid(), path, toy_provenance());
    const std::string good = slurp(path);
    std::size_t header_end = 0;
    for (int k = 0; k < 3; ++k) header_end = good.find('\n', header_end) + 1;
    std::mt19937 rng(5);
    int rejected = 0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
        std::string bad = good;
        const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, header_end - 1)(rng);
        char c;
        do c = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
        while (c == bad[pos]);
        bad[pos] = c;
        spit(path, bad);
        try {
            load_chaos_map(path);
        } catch (const Error&) {
            ++rejected;
        }
    }
    EXPECT_EQ(rejected, trials);
}

TEST(Persist, DamagedBodyAndSidecar) {
    const std::string path = temp_path("body.csv");
    save_chaos_map(toy_grid(), path, toy_provenance());
    const std::string good = slurp(path), side = slurp(sidecar_path(path));

    spit(path, good.substr(0, good.size() - 10));  // truncated last row
    EXPECT_THROW(load_chaos_map(path), FormatError);

    std::string extra = good + good.substr(good.rfind('\n', good.size() - 2) + 1);
    spit(path, extra);  // duplicated row
    EXPECT_THROW(load_chaos_map(path), FormatError);

    std::string swapped = good;
    swapped.replace(swapped.find("\n0,0,") + 1, 4, "1,0,");
    spit(path, swapped);
    EXPECT_THROW(load_chaos_map(path), FormatError);

    spit(path, good);
    spit(sidecar_path(path), side.substr(0, side.size() / 2));
    EXPECT_THROW(load_chaos_map(path), FormatError);

    std::filesystem::remove(sidecar_path(path));
    EXPECT_THROW(load_chaos_map(path), FormatError);
}

TEST(Persist, ScanRoundTrip) {
    DisintegrationScan s;
    s.Gamma = 80;
    for (int k = 0; k < 3; ++k) {
        DisintegrationRow r;
        r.K_over_w0 = (k + 1) * 1e-4;
        r.gamma_K = 80 * r.K_over_w0;
        r.N = 640;
        r.converged = k < 2;
        r.n_min = 77.0 - k;
        r.S_min = 0.6 + k * 0.01;
        r.quality = 0.8 - 0.3 * k;
        r.disintegrated = r.quality < 0.3;
        r.regime = regime_of(r.gamma_K, s.thresholds);
        s.rows.push_back(r);
    }
    s.rows[2].failed = true;
    s.rows[2].message = "coverage, \"wide\"";
    const std::string path = temp_path("scan.csv");
    Provenance p;
    p.subcommand = "disintegration";
    save_scan(s, path, p);
    const DisintegrationScan t = load_scan(path);
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.Gamma, 80);
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(t.rows[k].K_over_w0, s.rows[k].K_over_w0);
        EXPECT_EQ(t.rows[k].n_min, s.rows[k].n_min);
        EXPECT_EQ(t.rows[k].S_min, s.rows[k].S_min);
        EXPECT_EQ(t.rows[k].quality, s.rows[k].quality);
        EXPECT_EQ(t.rows[k].regime, s.rows[k].regime);
        EXPECT_EQ(t.rows[k].converged, s.rows[k].converged);
        EXPECT_EQ(t.rows[k].message, s.rows[k].message);
    }
    EXPECT_THROW(load_chaos_map(path), FormatError);  // wrong schema
}
