#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "kpo/classical/lyapunov.hpp"
#include "kpo/core/parallel.hpp"
#include "kpo/core/roots.hpp"
#include "kpo/model/hamiltonian.hpp"

namespace kpo::classical {

/// A ray in parameter space at fixed K/omega0 parametrized by Gamma.
struct ThresholdOptions {
    double K_over_w0 = 4e-4;
    double gamma_lo = 30.0;
    double gamma_hi = 100.0;
    double C = 10.0;
    double omega_d_over_w0 = 1.999866;
    model::KerrConvention convention = model::KerrConvention::exact;
    int probe_count = 25;
    /// Probe-disk radius as a fraction of the focal distance sqrt(2 Gamma).
    /// Chaos first appears in the thin layer around the hyperbolic point, so
    /// larger disks delay the vote: the onset moves from 0.0192 (0.05) to
    /// 0.0235 (0.2) in Gamma K / omega0, and only the small disk is stable
    /// under doubling the horizon.
    double probe_radius_frac = 0.05;
    std::uint64_t seed = 1;
    int grid = 201;
    double bbox_scale = 1.2;
    double gamma_tol = 0.25;         ///< bisection stops when the bracket is narrower
    double absolute_min = 1e-3;      ///< chaos cutoff floor, units of omega0
    LyapunovOptions lyap;
    int workers = 1;
};

struct ThresholdPoint {
    double Gamma = 0.0;
    double gamma_K = 0.0;  ///< Gamma K / omega0 = g3 Omega_d omega_d / (omega0 (omega_d^2 - omega0^2))
};

struct ThresholdResult {
    ThresholdPoint inner;
    ThresholdPoint merge;
    int evaluations = 0;
};

/// Axis-aligned box around the static separatrix through the saddle d+.
struct SeparatrixBox {
    double q_min = 0.0, q_max = 0.0, p_min = 0.0, p_max = 0.0;
};

inline SeparatrixBox static_separatrix_box(const ClassicalParams& cp) {
    if (!cp.has_double_well() || cp.g4 == 0.0) throw RangeError("no static separatrix without a double well");
    const double root = std::sqrt(cp.g3 * cp.g3 - 2.0 * cp.g4 * cp.omega0);
    const double d_plus = std::numbers::sqrt2 * (-cp.g3 + root) / (4.0 * cp.g4);
    const double e = h0(d_plus, 0.0, cp);
    auto f = [&](double q) { return h0(q, 0.0, cp) - e; };
    // the other turning point of the separatrix lies on the opposite side of the origin
    const double dir = d_plus < 0.0 ? 1.0 : -1.0;
    double far = dir * std::abs(d_plus);
    for (int i = 0; i < 60 && f(far) < 0.0; ++i) far *= 1.5;
    const double q_turn = find_root(f, dir * 1e-12, far);
    SeparatrixBox b;
    b.q_min = std::min(d_plus, q_turn);
    b.q_max = std::max(d_plus, q_turn);
    const double pm = std::sqrt(2.0 * e / cp.omega0);
    b.p_min = -pm;
    b.p_max = pm;
    return b;
}

inline SeparatrixBox scaled(const SeparatrixBox& b, double s) {
    const double qc = 0.5 * (b.q_min + b.q_max), pc = 0.5 * (b.p_min + b.p_max);
    const double qh = 0.5 * s * (b.q_max - b.q_min), ph = 0.5 * s * (b.p_max - b.p_min);
    return {qc - qh, qc + qh, pc - ph, pc + ph};
}

/// Classical parameters and geometry at one point of the ray.
struct RayPoint {
    model::OscillatorParams quantum;
    ClassicalParams classical;
    double Gamma = 0.0;
    double gamma_K = 0.0;
    PhasePoint center;
    double focal = 0.0;
};

class ThresholdRay {
public:
    explicit ThresholdRay(ThresholdOptions opt) : opt_(std::move(opt)) {
        // g3 and g4 depend only on K, so solve once
        base_ = model::params_from_targets(opt_.K_over_w0, 1.0, opt_.C, opt_.omega_d_over_w0, opt_.convention);
    }

    const ThresholdOptions& options() const { return opt_; }

    RayPoint at(double Gamma) const {
        RayPoint r;
        r.quantum = base_;
        const double Pi = Gamma * opt_.K_over_w0 / base_.g3;
        r.quantum.Omega_d = Pi * (base_.omega_d * base_.omega_d - 1.0) / base_.omega_d;
        r.classical = model::classical_from_quantum(r.quantum, 1.0);
        r.Gamma = Gamma;
        r.gamma_K = base_.g3 * r.quantum.Omega_d * base_.omega_d / (base_.omega_d * base_.omega_d - 1.0);
        r.center = {std::numbers::sqrt2 * Pi, 0.0};
        r.focal = std::sqrt(2.0 * Gamma);
        return r;
    }

    double cutoff(const RayPoint& r) const {
        return chaos_cutoff(regular_floor(r.classical, opt_.lyap), opt_.absolute_min);
    }

    /// Median exponent over seeded uniform samples of the probe disk.
    double probe_median(const RayPoint& r) const {
        std::mt19937_64 rng(opt_.seed ^ static_cast<std::uint64_t>(std::llround(r.Gamma * 1e6)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double R = opt_.probe_radius_frac * r.focal;
        std::vector<PhasePoint> pts(opt_.probe_count);
        for (auto& pt : pts) {
            const double rad = R * std::sqrt(u(rng));
            const double th = 2.0 * std::numbers::pi * u(rng);
            pt = {r.center.q + rad * std::cos(th), r.center.p + rad * std::sin(th)};
        }
        std::vector<double> lam(pts.size());
        parallel_for(static_cast<int>(pts.size()), opt_.workers, [&](int i) {
            const LyapunovResult res = lyapunov(pts[i], r.classical, opt_.lyap);
            lam[i] = res.escaped ? std::numeric_limits<double>::infinity() : res.lambda;
        });
        std::nth_element(lam.begin(), lam.begin() + lam.size() / 2, lam.end());
        return lam[lam.size() / 2];
    }

    bool inner_chaotic(double Gamma) const {
        const RayPoint r = at(Gamma);
        return probe_median(r) > cutoff(r);
    }

    /// Chaotic mask (escape counts as chaotic) on the grid over the scaled
    /// static-separatrix box; row-major with q fastest.
    std::vector<char> chaos_mask(const RayPoint& r, SeparatrixBox* box_out = nullptr) const {
        const SeparatrixBox box = scaled(static_separatrix_box(r.classical), opt_.bbox_scale);
        if (box_out) *box_out = box;
        const int n = opt_.grid;
        const double cut = cutoff(r);
        std::vector<char> mask(static_cast<std::size_t>(n) * n, 0);
        parallel_for(n * n, opt_.workers, [&](int k) {
            const int i = k % n, j = k / n;
            const PhasePoint pt{box.q_min + (box.q_max - box.q_min) * i / (n - 1),
                                box.p_min + (box.p_max - box.p_min) * j / (n - 1)};
            const LyapunovResult res = lyapunov(pt, r.classical, opt_.lyap);
            mask[k] = res.escaped || res.lambda > cut;
        });
        return mask;
    }

    /// Same answer as flood-filling chaos_mask, but only cells on the growing
    /// chaotic component and its rim are integrated; the fill advances one
    /// frontier at a time so each frontier is evaluated in parallel.
    bool merged(double Gamma, int* cells_evaluated = nullptr) const {
        const RayPoint r = at(Gamma);
        const SeparatrixBox box = scaled(static_separatrix_box(r.classical), opt_.bbox_scale);
        const int n = opt_.grid;
        const double cut = cutoff(r);
        auto cell_point = [&](int k) {
            const int i = k % n, j = k / n;
            return PhasePoint{box.q_min + (box.q_max - box.q_min) * i / (n - 1),
                              box.p_min + (box.p_max - box.p_min) * j / (n - 1)};
        };
        const int ci = static_cast<int>(std::lround((r.center.q - box.q_min) / (box.q_max - box.q_min) * (n - 1)));
        const int cj = static_cast<int>(std::lround((r.center.p - box.p_min) / (box.p_max - box.p_min) * (n - 1)));
        if (ci < 0 || cj < 0 || ci >= n || cj >= n) return false;

        std::vector<char> queued(static_cast<std::size_t>(n) * n, 0);
        std::vector<int> frontier{cj * n + ci};
        queued[frontier[0]] = 1;
        int evaluated = 0;
        bool reached = false;
        while (!frontier.empty() && !reached) {
            std::vector<char> hit(frontier.size(), 0);
            parallel_for(static_cast<int>(frontier.size()), opt_.workers, [&](int f) {
                const LyapunovResult res = lyapunov(cell_point(frontier[f]), r.classical, opt_.lyap);
                hit[f] = res.escaped || res.lambda > cut;
            });
            evaluated += static_cast<int>(frontier.size());
            std::vector<int> next;
            for (std::size_t f = 0; f < frontier.size() && !reached; ++f) {
                if (!hit[f]) continue;
                const int k = frontier[f], i = k % n, j = k / n;
                if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
                    reached = true;
                    break;
                }
                for (int nb : {k - 1, k + 1, k - n, k + n}) {
                    if (!queued[nb]) {
                        queued[nb] = 1;
                        next.push_back(nb);
                    }
                }
            }
            frontier = std::move(next);
        }
        if (cells_evaluated) *cells_evaluated = evaluated;
        return reached;
    }

    /// 4-connected flood fill of chaotic cells from the cell nearest `c`.
    static bool centre_reaches_boundary(const std::vector<char>& mask, int n, const SeparatrixBox& box, PhasePoint c) {
        const int ci = static_cast<int>(std::lround((c.q - box.q_min) / (box.q_max - box.q_min) * (n - 1)));
        const int cj = static_cast<int>(std::lround((c.p - box.p_min) / (box.p_max - box.p_min) * (n - 1)));
        if (ci < 0 || cj < 0 || ci >= n || cj >= n) return false;
        if (!mask[static_cast<std::size_t>(cj) * n + ci]) return false;
        std::vector<char> seen(mask.size(), 0);
        std::vector<int> stack{cj * n + ci};
        seen[stack.back()] = 1;
        while (!stack.empty()) {
            const int k = stack.back();
            stack.pop_back();
            const int i = k % n, j = k / n;
            if (i == 0 || j == 0 || i == n - 1 || j == n - 1) return true;
            for (int nb : {k - 1, k + 1, k - n, k + n}) {
                if (!seen[nb] && mask[nb]) {
                    seen[nb] = 1;
                    stack.push_back(nb);
                }
            }
        }
        return false;
    }

private:
    ThresholdOptions opt_;
    model::OscillatorParams base_;
};

/// Smallest Gamma in [lo, hi] at which pred turns true, to within tol.
inline double bisect_onset(const std::function<bool(double)>& pred, double lo, double hi, double tol,
                           int* evaluations = nullptr) {
    int evals = 0;
    auto eval = [&](double g) {
        ++evals;
        return pred(g);
    };
    if (eval(lo)) {
        std::ostringstream os;
        os << "threshold ray does not bracket the onset: already chaotic at Gamma = " << lo;
        throw RangeError(os.str());
    }
    if (!eval(hi)) {
        std::ostringstream os;
        os << "threshold ray does not bracket the onset: still regular at Gamma = " << hi;
        throw RangeError(os.str());
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (eval(mid)) hi = mid;
        else lo = mid;
    }
    if (evaluations) *evaluations += evals;
    return 0.5 * (lo + hi);
}

/// Inner onset (median probe-disk exponent turns positive) and merge (the
/// chaotic component at the lemniscate centre reaches the outer box).
inline ThresholdResult threshold_scan(const ThresholdOptions& opt, bool want_inner = true, bool want_merge = true) {
    ThresholdRay ray(opt);
    ThresholdResult out;
    if (want_inner) {
        const double g = bisect_onset([&](double G) { return ray.inner_chaotic(G); }, opt.gamma_lo, opt.gamma_hi,
                                      opt.gamma_tol, &out.evaluations);
        out.inner = {g, ray.at(g).gamma_K};
    }
    if (want_merge) {
        const double g = bisect_onset([&](double G) { return ray.merged(G); }, opt.gamma_lo, opt.gamma_hi,
                                      opt.gamma_tol, &out.evaluations);
        out.merge = {g, ray.at(g).gamma_K};
    }
    return out;
}

}  // namespace kpo::classical
