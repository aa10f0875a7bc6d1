// teik - Lorentzian distance via maximizing geodesics, distance fields d_p,
// eikonal verification, and empirical values for the theory's constants.
#ifndef TEIK_MAXDIST_HPP
#define TEIK_MAXDIST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "causal.hpp"
#include "core.hpp"
#include "geodesic.hpp"
#include "metric.hpp"

namespace teik {

enum class CausalStatus { timelike, null_boundary, not_causally_related };

inline const char* to_string(CausalStatus s) {
    switch (s) {
        case CausalStatus::timelike: return "timelike";
        case CausalStatus::null_boundary: return "null-boundary";
        case CausalStatus::not_causally_related: return "not-causally-related";
    }
    return "?";
}

struct DistanceResult {
    double value = 0.0;
    CausalStatus status = CausalStatus::not_causally_related;
    std::optional<Geodesic> maximizer;
    std::optional<double> method_agreement; // |shooting - variational|
    bool ambiguous_cut = false;  // second connection of equal length (advisory)
    double launch_chi = std::numeric_limits<double>::quiet_NaN();
};

// Rectangular grid of u values with the raised gradient (g-gradient).  Node
// (ix, iy) sits at window corner + (ix*dx, iy*dy), row-major ix + nx*iy.
struct ScalarField {
    Rect window;
    int nx = 0, ny = 0;
    std::vector<double> values;
    std::vector<Vec2> gradient;      // g^{-1} du
    // Unit future timelike velocity of the maximizer at its arrival, per node
    // (for a distance field from p this is the arrival velocity v*, so the
    // exact gradient of d is -v* and of t - d is +v*).  Empty if unavailable.
    std::vector<Vec2> arrival_velocity;
    std::vector<uint8_t> valid;      // node passed the cone-margin mask
    std::vector<uint8_t> one_sided;  // gradient used one-sided differences
    int fallback_nodes = 0;          // fan could not serve these; shot per-node
    double epsilon_margin = 0.0;

    size_t index(int ix, int iy) const { return size_t(ix) + size_t(nx) * iy; }
    double dx() const { return nx > 1 ? window.width() / (nx - 1) : 0.0; }
    double dy() const { return ny > 1 ? window.height() / (ny - 1) : 0.0; }
    Vec2 node(int ix, int iy) const {
        return {window.x0 + ix * dx(), window.y0 + iy * dy()};
    }
    bool is_valid(int ix, int iy) const { return valid[index(ix, iy)] != 0; }

    // Bilinear interpolation; requires all four surrounding nodes valid.
    bool cell_of(Vec2 q, int& ix, int& iy, double& fx, double& fy) const {
        double gx = (q.x - window.x0) / dx();
        double gy = (q.y - window.y0) / dy();
        ix = int(std::floor(gx));
        iy = int(std::floor(gy));
        if (ix < 0 || iy < 0 || ix >= nx - 1 || iy >= ny - 1) return false;
        fx = gx - ix;
        fy = gy - iy;
        return valid[index(ix, iy)] && valid[index(ix + 1, iy)] &&
               valid[index(ix, iy + 1)] && valid[index(ix + 1, iy + 1)];
    }
    double value_at(Vec2 q) const {
        int ix, iy; double fx, fy;
        if (!cell_of(q, ix, iy, fx, fy))
            throw OutOfChart("ScalarField: point outside valid grid");
        return (1 - fx) * (1 - fy) * values[index(ix, iy)] +
               fx * (1 - fy) * values[index(ix + 1, iy)] +
               (1 - fx) * fy * values[index(ix, iy + 1)] +
               fx * fy * values[index(ix + 1, iy + 1)];
    }
    Vec2 gradient_at(Vec2 q) const {
        int ix, iy; double fx, fy;
        if (!cell_of(q, ix, iy, fx, fy))
            throw OutOfChart("ScalarField: point outside valid grid");
        return (1 - fx) * (1 - fy) * gradient[index(ix, iy)] +
               fx * (1 - fy) * gradient[index(ix + 1, iy)] +
               (1 - fx) * fy * gradient[index(ix, iy + 1)] +
               fx * fy * gradient[index(ix + 1, iy + 1)];
    }
    Vec2 velocity_at(Vec2 q) const {
        int ix, iy; double fx, fy;
        if (arrival_velocity.empty() || !cell_of(q, ix, iy, fx, fy))
            throw OutOfChart("ScalarField: point outside valid grid");
        return (1 - fx) * (1 - fy) * arrival_velocity[index(ix, iy)] +
               fx * (1 - fy) * arrival_velocity[index(ix + 1, iy)] +
               (1 - fx) * fy * arrival_velocity[index(ix, iy + 1)] +
               fx * fy * arrival_velocity[index(ix + 1, iy + 1)];
    }
    bool covers(Vec2 q) const {
        int ix, iy; double fx, fy;
        return cell_of(q, ix, iy, fx, fy);
    }
};

//----------------------------------------------------------------------------
// Boost coordinate of a chord: h = a T + b E in the orthonormal frame at a
// point; strictly timelike future chords have a > |b| and boost atanh(b/a).

namespace detail {

struct ChordBoost {
    bool inside = false;
    double chi = 0.0;
};

inline ChordBoost boost_of_chord(const MetricEval& me, Vec2 h) {
    Frame fr = MetricSpec::frame_from(me);
    double a = -me.g.bilin(h, fr.T);
    double b = me.g.bilin(h, fr.E);
    ChordBoost cb;
    if (!(a > std::abs(b))) return cb;
    cb.inside = true;
    cb.chi = 0.5 * std::log((a + b) / (a - b));
    return cb;
}

} // namespace detail

//----------------------------------------------------------------------------
// lorentz_distance: shooting sweep (cold) or hint-driven bracket (warm),
// polished at a finer step, with status classification against the stable
// cone.  The secondary variational method cross-checks on demand.

struct DistanceOptions {
    int sweep = 512;          // cold-start boost resolution over [-chi_max, chi_max]
    double chi_max = 8.0;
    double step = 0.02;       // bracket-hunting integration step
    double fine_step = 5e-3;  // polish step for the returned value
    double miss_tol = 1e-9;
    std::optional<double> hint;       // warm-start boost angle
    const ConeEstimate* cone = nullptr; // for status classification
    double boundary_band = 0.01;      // |margin| below this counts as boundary
    bool cross_check = false;         // run the variational method too
    uint64_t rng_seed = 0;            // reserved; method is deterministic
};

namespace detail {

// Discrete maximization of g-arclength over broken paths with fixed
// endpoints: limited-memory quasi-Newton ascent with backtracking that keeps
// every segment strictly timelike ("projection" onto the causal constraint).
// Returns the discrete maximum; accuracy improves as O(1/N^2).
template <MetricModel M>
double variational_length(const M& metric, Vec2 x, Vec2 y, int n_interior,
                          const std::vector<GeodesicSample>* warm = nullptr) {
    int N = n_interior + 1; // segments
    std::vector<Vec2> P(N + 1);
    if (warm && warm->size() >= 2) {
        // resample the warm polyline by index
        for (int i = 0; i <= N; ++i) {
            double s = double(i) / N * (warm->size() - 1);
            size_t j = std::min(size_t(s), warm->size() - 2);
            double f = s - j;
            P[i] = (1 - f) * (*warm)[j].p + f * (*warm)[j + 1].p;
        }
        P[0] = x;
        P[N] = y;
    } else {
        for (int i = 0; i <= N; ++i) P[i] = x + (double(i) / N) * (y - x);
    }

    auto seg_q = [&](Vec2 a, Vec2 b) {
        Vec2 mid = 0.5 * (a + b);
        return metric.eval(mid).g.quad(b - a);
    };
    auto total_len = [&](const std::vector<Vec2>& pts, bool& ok) {
        double L = 0.0;
        ok = true;
        for (int i = 0; i < N; ++i) {
            double q = seg_q(pts[i], pts[i + 1]);
            if (!(q < 0.0)) { ok = false; return 0.0; }
            L += std::sqrt(-q);
        }
        return L;
    };

    bool ok = false;
    double L = total_len(P, ok);
    if (!ok) throw PreconditionError("variational_length: start path not timelike");

    // gradient of L wrt interior nodes
    auto grad = [&](const std::vector<Vec2>& pts, std::vector<Vec2>& g) {
        g.assign(n_interior, Vec2{0, 0});
        for (int i = 0; i < N; ++i) {
            Vec2 d = pts[i + 1] - pts[i];
            Vec2 mid = 0.5 * (pts[i] + pts[i + 1]);
            MetricEval me = metric.eval(mid);
            double q = me.g.quad(d);
            double ell = std::sqrt(-q);
            Vec2 gd = me.g.mul(d);
            Vec2 dpos{0.5 * me.dg[0].quad(d), 0.5 * me.dg[1].quad(d)};
            // dL/dP_{i+1} from this segment
            if (i + 1 <= n_interior) {
                Vec2 dq = 2.0 * gd + dpos;
                g[i] += (-0.5 / ell) * dq; // note g[] is 0-based at P_1
            }
            // dL/dP_i from this segment
            if (i >= 1) {
                Vec2 dq = -2.0 * gd + dpos;
                g[i - 1] += (-0.5 / ell) * dq;
            }
        }
    };

    // L-BFGS (maximization: work with f = -L), memory 8
    const int mem = 8;
    std::vector<std::vector<Vec2>> s_hist, y_hist;
    std::vector<double> rho_hist;
    std::vector<Vec2> g_cur(n_interior), g_new(n_interior), dir(n_interior);
    grad(P, g_cur);

    auto dot_vv = [&](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) s += dot(a[i], b[i]);
        return s;
    };

    for (int it = 0; it < 500; ++it) {
        // two-loop recursion on f = -L (grad f = -g_cur)
        for (int i = 0; i < n_interior; ++i) dir[i] = g_cur[i]; // ascent dir = +g
        if (!s_hist.empty()) {
            std::vector<Vec2> q(n_interior);
            for (int i = 0; i < n_interior; ++i) q[i] = -1.0 * g_cur[i];
            std::vector<double> alpha(s_hist.size());
            for (int k = int(s_hist.size()) - 1; k >= 0; --k) {
                alpha[k] = rho_hist[k] * dot_vv(s_hist[k], q);
                for (int i = 0; i < n_interior; ++i) q[i] -= alpha[k] * y_hist[k][i];
            }
            double gamma = dot_vv(s_hist.back(), y_hist.back()) /
                           std::max(1e-300, dot_vv(y_hist.back(), y_hist.back()));
            for (int i = 0; i < n_interior; ++i) q[i] *= gamma;
            for (size_t k = 0; k < s_hist.size(); ++k) {
                double beta = rho_hist[k] * dot_vv(y_hist[k], q);
                for (int i = 0; i < n_interior; ++i)
                    q[i] += (alpha[k] - beta) * s_hist[k][i];
            }
            for (int i = 0; i < n_interior; ++i) dir[i] = -1.0 * q[i]; // descent on f -> ascent on L
        }
        if (dot_vv(dir, g_cur) <= 0.0)
            for (int i = 0; i < n_interior; ++i) dir[i] = g_cur[i];

        double step = 1.0;
        std::vector<Vec2> Pn = P;
        double Ln = L;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (int i = 0; i < n_interior; ++i) Pn[i + 1] = P[i + 1] + step * dir[i];
            bool tl = false;
            Ln = total_len(Pn, tl);
            if (tl && Ln > L + 1e-16) { accepted = true; break; }
            step *= 0.5;
            if (step < 1e-12) break;
        }
        if (!accepted) break;

        grad(Pn, g_new);
        std::vector<Vec2> s_vec(n_interior), y_vec(n_interior);
        for (int i = 0; i < n_interior; ++i) {
            s_vec[i] = Pn[i + 1] - P[i + 1];
            y_vec[i] = -1.0 * (g_new[i] - g_cur[i]); // y of f = -L
        }
        double sy = dot_vv(s_vec, y_vec);
        if (sy > 1e-14) {
            s_hist.push_back(std::move(s_vec));
            y_hist.push_back(std::move(y_vec));
            rho_hist.push_back(1.0 / sy);
            if (int(s_hist.size()) > mem) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        double gain = Ln - L;
        P.swap(Pn);
        L = Ln;
        g_cur.swap(g_new);
        if (gain < 1e-12 && dot_vv(g_cur, g_cur) < 1e-20) break;
        if (gain < 1e-14) break;
    }
    return L;
}

} // namespace detail

// Discrete-maximum cross check with Richardson extrapolation in the node
// count (the broken-path maximum approaches the smooth one as O(1/N^2)).
template <MetricModel M>
double variational_distance(const M& metric, Vec2 x, Vec2 y,
                            const std::vector<GeodesicSample>* warm = nullptr) {
    double L32 = detail::variational_length(metric, x, y, 31, warm);
    double L64 = detail::variational_length(metric, x, y, 63, warm);
    return (4.0 * L64 - L32) / 3.0;
}

template <MetricModel M>
DistanceResult lorentz_distance(const M& metric, Vec2 x, Vec2 y,
                                const DistanceOptions& opt = {}) {
    DistanceResult res;
    Vec2 h = y - x;
    if (h.norm() == 0.0) return res;

    auto classify_miss = [&]() {
        // no timelike connection found: boundary vs outside via cone margin
        double margin;
        if (opt.cone) {
            margin = cone_margin(*opt.cone, h);
        } else {
            // pointwise cone at x as a fallback classifier
            auto nd = null_directions_at(metric, x);
            ConeEstimate local{nd[0], nd[1], 0.0, 0.0};
            margin = cone_margin(local, h);
        }
        res.status = std::abs(margin) <= opt.boundary_band
                         ? CausalStatus::null_boundary
                         : CausalStatus::not_causally_related;
        res.value = 0.0;
    };

    ShootOptions so;
    so.step = opt.step;
    so.miss_tol = opt.miss_tol;
    so.chi_max = opt.chi_max;
    so.sweep = opt.sweep;
    so.hint = opt.hint;
    so.drift_tol = 1e-2; // search phase; the polish pass guards integrity

    ShootHit hit;
    try {
        hit = shoot_to_target(metric, x, y, so);
    } catch (const NoBracket&) {
        classify_miss();
        return res;
    }

    if (opt.fine_step < opt.step) {
        ShootOptions fine = so;
        fine.step = opt.fine_step;
        fine.drift_tol = 1e-4;
        fine.hint = hit.chi;
        bool amb = hit.ambiguous;
        hit = shoot_to_target(metric, x, y, fine);
        hit.ambiguous = hit.ambiguous || amb;
    }

    if (!(hit.distance > 1e-7)) {
        // a grazing connection: numerically on the cone boundary
        res.status = CausalStatus::null_boundary;
        res.value = 0.0;
        return res;
    }

    res.value = hit.distance;
    res.status = CausalStatus::timelike;
    res.launch_chi = hit.chi;
    res.ambiguous_cut = hit.ambiguous;

    Geodesic seg;
    {
        ShootOptions keep = so;
        keep.step = std::min(opt.step, opt.fine_step);
        keep.drift_tol = 1e-4;
        Frame fr = future_frame_at(metric, x);
        detail::MissEval fin = detail::eval_miss(metric, fr, x, y, hit.chi, keep, &seg);
        (void)fin;
    }
    res.maximizer = std::move(seg);

    if (opt.cross_check) {
        double lv = variational_distance(metric, x, y, &res.maximizer->samples);
        res.method_agreement = std::abs(lv - res.value);
    }
    return res;
}

template <MetricModel M>
bool reachable(const M& metric, Vec2 x, Vec2 y, const DistanceOptions& opt = {}) {
    return lorentz_distance(metric, x, y, opt).status == CausalStatus::timelike;
}

//----------------------------------------------------------------------------
// distance_field: d_p over a grid window.
//
// A per-node shooting solve would repeat nearly identical long integrations
// thousands of times.  Instead one fan of geodesics from p covering the
// window's boost range is integrated once; every node is then bracketed
// between two adjacent fan curves and its distance interpolated in the boost
// parameter through a 4-point stencil (cubic in chi, evaluated at the root
// of the signed miss).  The first-order endpoint correction
//   d ~ t* - <g v(t*), y - p(t*)>
// makes each per-curve estimate quadratically accurate in the miss, and the
// chi-interpolation then cancels most of that quadratic term at the root.
// Node evaluations are independent (disjoint writes), so the node loop is
// parallelizable; it runs serially here.

struct FieldOptions {
    double step = 5e-3;        // fan integration step
    int fan_size = 400;
    const ConeEstimate* cone = nullptr;
    double cone_length = 100.0; // when the cone must be computed internally
    double cone_step = 1e-3;
    bool polish = false;        // one warm shot per node after interpolation
    double drift_tol = 1e-2;
};

namespace detail {

struct FanCurve {
    double chi;
    std::vector<GeodesicSample> band; // samples within the window depth band
};

struct NodeMiss {
    double m;  // signed miss
    double d;  // corrected distance estimate
    Vec2 v;    // velocity at the closest approach
    bool ok;
};

// Closest approach of a sampled curve to y, with parabola refinement of the
// arrival parameter and the endpoint-corrected distance.
template <MetricModel M>
NodeMiss node_from_curve(const M& metric, const std::vector<GeodesicSample>& s,
                         Vec2 y) {
    NodeMiss nm{0.0, 0.0, {0, 0}, false};
    if (s.size() < 3) return nm;
    size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.size(); ++i) {
        double d2 = (s[i].p - y).norm2();
        if (d2 < bd) { bd = d2; best = i; }
    }
    if (best == 0 || best + 1 >= s.size()) return nm; // foot outside the band
    double t0 = s[best - 1].t, t1 = s[best].t, t2 = s[best + 1].t;
    double f0 = (s[best - 1].p - y).norm2();
    double f1 = (s[best].p - y).norm2();
    double f2 = (s[best + 1].p - y).norm2();
    double d01 = (f1 - f0) / (t1 - t0), d12 = (f2 - f1) / (t2 - t1);
    double dd = (d12 - d01) / (t2 - t0);
    double ts = t1;
    if (dd > 0.0) ts = std::clamp(0.5 * (t0 + t1) - 0.5 * d01 / dd, t0, t2);
    // Hermite position / linear velocity at ts within the containing segment
    const GeodesicSample* a = &s[best - 1];
    const GeodesicSample* b = &s[best];
    if (ts > t1) { a = &s[best]; b = &s[best + 1]; }
    double hseg = b->t - a->t;
    double u = (ts - a->t) / hseg;
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    Vec2 ps = h00 * a->p + (h10 * hseg) * a->v + h01 * b->p + (h11 * hseg) * b->v;
    Vec2 vs = (1 - u) * a->v + u * b->v;
    Vec2 r = y - ps;
    double miss = r.norm();
    nm.m = cross(vs, r) >= 0.0 ? miss : -miss;
    nm.d = ts - metric.eval(ps).g.bilin(vs, r);
    nm.v = vs;
    nm.ok = true;
    return nm;
}

} // namespace detail

template <MetricModel M>
ScalarField distance_field(const M& metric, Vec2 p, Rect window, int nx, int ny,
                           double epsilon_margin = 0.05,
                           const FieldOptions& opt = {}) {
    require(nx >= 2 && ny >= 2, "distance_field: resolution >= 2 per axis");
    ScalarField field;
    field.window = window;
    field.nx = nx;
    field.ny = ny;
    field.epsilon_margin = epsilon_margin;
    size_t n_nodes = size_t(nx) * ny;
    field.values.assign(n_nodes, std::numeric_limits<double>::quiet_NaN());
    field.gradient.assign(n_nodes, Vec2{0, 0});
    field.arrival_velocity.assign(n_nodes, Vec2{0, 0});
    field.valid.assign(n_nodes, 0);
    field.one_sided.assign(n_nodes, 0);

    ConeEstimate cone_local;
    const ConeEstimate* cone = opt.cone;
    if (!cone) {
        cone_local = estimate_cone(metric, opt.cone_length, opt.cone_step);
        cone = &cone_local;
    }

    // mask + boost hints
    MetricEval me_p = metric.eval(p);
    Frame fr = MetricSpec::frame_from(me_p);
    std::vector<double> hint(n_nodes, 0.0);
    double chi_lo = std::numeric_limits<double>::infinity();
    double chi_hi = -std::numeric_limits<double>::infinity();
    Vec2 uc{0, 0};
    double depth_max = 0.0;
    int n_valid = 0;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            Vec2 node = field.node(ix, iy);
            Vec2 h = node - p;
            if (h.norm() < 1e-12) continue;
            if (cone_margin(*cone, h) < epsilon_margin) continue;
            detail::ChordBoost cb = detail::boost_of_chord(me_p, h);
            if (!cb.inside) continue;
            size_t id = field.index(ix, iy);
            field.valid[id] = 1;
            hint[id] = cb.chi;
            chi_lo = std::min(chi_lo, cb.chi);
            chi_hi = std::max(chi_hi, cb.chi);
            uc += normalized(h);
            depth_max = std::max(depth_max, h.norm());
            ++n_valid;
        }
    if (n_valid == 0)
        throw EmptyWindow("distance_field: no grid node passes the cone margin");
    uc = normalized(uc);
    double depth_min = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            if (field.valid[field.index(ix, iy)])
                depth_min = std::min(depth_min, dot(field.node(ix, iy) - p, uc));
    // set per attempt: the transverse fan pad shortens the depth coordinate
    // at closest approach only quadratically
    double band_lo = 0.0, band_hi = depth_max;

    // fan integration with band-limited sample retention
    auto integrate_fan_curve = [&](double chi, std::vector<GeodesicSample>& out) {
        out.clear();
        detail::PV s{p, std::cosh(chi) * fr.T + std::sinh(chi) * fr.E};
        double q0 = me_p.g.quad(s.v);
        double t = 0.0;
        double t_cap = 64.0 * (band_hi + 1.0);
        size_t guard = 0;
        while (t < t_cap) {
            double depth = dot(s.p - p, uc);
            if (depth >= band_lo) out.push_back({t, s.p, s.v});
            if (depth >= band_hi) break;
            s = detail::rk4_step(metric, s, opt.step);
            t += opt.step;
            if (++guard > 80000000)
                throw IntegrationError("distance_field: fan curve exceeded step budget");
        }
        if (out.size() >= 3) {
            double q = metric.eval(out.back().p).g.quad(out.back().v);
            if (std::abs(q - q0) > opt.drift_tol)
                throw IntegrationError("distance_field: fan norm drift " +
                                       std::to_string(std::abs(q - q0)));
        }
    };

    int NF = std::max(8, opt.fan_size);
    std::vector<detail::FanCurve> fan;
    // Padding floor shrinks with depth: far windows subtend a narrow boost
    // interval and the bearing hints tighten as O(1/depth), so a fixed floor
    // would waste nearly the whole fan outside the window.
    double pad_floor = 0.05 * std::min(1.0, 10.0 / std::max(depth_min, 1e-9));

    // Calibrate the hints against the integrated flow. The straight chord
    // misreads the launch boost on metrics whose geodesics wiggle around
    // their mean line, and that error does not decay with depth while the
    // window of useful bearings does. Two pilot curves bracketing the chord
    // window give, per node, a secant estimate of the true bearing; the
    // window is rebuilt from those (nodes whose pilots fail keep the chord).
    {
        band_lo = std::max(0.0, depth_min - 1.0);
        band_hi = depth_max + 1.0;
        double mid = 0.5 * (chi_lo + chi_hi);
        double half = std::max(chi_hi - chi_lo, 2.0 * pad_floor);
        std::vector<GeodesicSample> pa, pb;
        bool piloted = true;
        try {
            integrate_fan_curve(mid - half, pa);
            integrate_fan_curve(mid + half, pb);
        } catch (const NumericalError&) {
            piloted = false;
        }
        if (piloted) {
            double lo2 = std::numeric_limits<double>::infinity();
            double hi2 = -std::numeric_limits<double>::infinity();
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    size_t id = field.index(ix, iy);
                    if (!field.valid[id]) continue;
                    Vec2 node = field.node(ix, iy);
                    auto ma = detail::node_from_curve(metric, pa, node);
                    auto mb = detail::node_from_curve(metric, pb, node);
                    if (ma.ok && mb.ok && std::abs(mb.m - ma.m) > 1e-12)
                        hint[id] =
                            (mid - half) - ma.m * (2.0 * half) / (mb.m - ma.m);
                    lo2 = std::min(lo2, hint[id]);
                    hi2 = std::max(hi2, hint[id]);
                }
            chi_lo = lo2;
            chi_hi = hi2;
        }
    }

    double pad = std::max(0.25 * (chi_hi - chi_lo), pad_floor);
    for (int attempt = 0; attempt < 5; ++attempt) {
        double band_pad = std::max(0.5, pad * pad * depth_max + 1.0);
        band_lo = std::max(0.0, depth_min - band_pad);
        band_hi = depth_max + band_pad;
        double lo = chi_lo - pad, hi = chi_hi + pad;
        fan.assign(NF, {});
        for (int i = 0; i < NF; ++i) {
            fan[i].chi = lo + (hi - lo) * i / (NF - 1);
            integrate_fan_curve(fan[i].chi, fan[i].band);
        }
        // coverage: extreme curves must put every valid node strictly to one
        // side (miss sign differs between the two extremes)
        bool covered = true;
        for (int iy = 0; iy < ny && covered; ++iy)
            for (int ix = 0; ix < nx && covered; ++ix) {
                size_t id = field.index(ix, iy);
                if (!field.valid[id]) continue;
                Vec2 node = field.node(ix, iy);
                auto m0 = detail::node_from_curve(metric, fan.front().band, node);
                auto m1 = detail::node_from_curve(metric, fan.back().band, node);
                if (!m0.ok || !m1.ok || (m0.m <= 0) == (m1.m <= 0)) covered = false;
            }
        if (covered) break;
        pad *= 2.0;
        if (attempt == 4)
            throw NoBracket("distance_field: fan failed to cover the window");
    }

    // per-node evaluation
    bool sign_at_lo = false;
    {
        // orientation of the signed miss across the fan (dependent only on
        // frame handedness; measured once)
        for (int iy = 0; iy < ny && !sign_at_lo; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                size_t id = field.index(ix, iy);
                if (!field.valid[id]) continue;
                auto m0 = detail::node_from_curve(metric, fan.front().band,
                                                  field.node(ix, iy));
                sign_at_lo = m0.ok && m0.m > 0;
                break;
            }
    }

    int fallback = 0;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            size_t id = field.index(ix, iy);
            if (!field.valid[id]) continue;
            Vec2 node = field.node(ix, iy);

            // binary search for the sign change across the fan
            auto miss_of = [&](int ci) {
                return detail::node_from_curve(metric, fan[ci].band, node);
            };
            int lo = 0, hi = NF - 1;
            auto mlo = miss_of(lo);
            auto mhi = miss_of(hi);
            bool usable = mlo.ok && mhi.ok && (mlo.m > 0) != (mhi.m > 0);
            if (usable) {
                while (hi - lo > 1) {
                    int mid = (lo + hi) / 2;
                    auto mm = miss_of(mid);
                    if (!mm.ok) { usable = false; break; }
                    if ((mm.m > 0) == (mlo.m > 0)) { lo = mid; mlo = mm; }
                    else { hi = mid; mhi = mm; }
                }
            }
            double value = std::numeric_limits<double>::quiet_NaN();
            Vec2 varr{0, 0};
            if (usable) {
                // 4-point stencil clipped to the fan
                int s0 = std::clamp(lo - 1, 0, NF - 4);
                double cx[4], cm[4], cd[4], cvx[4], cvy[4];
                bool stencil_ok = true;
                for (int j = 0; j < 4; ++j) {
                    auto nm = (s0 + j == lo) ? mlo : (s0 + j == hi) ? mhi
                              : miss_of(s0 + j);
                    if (!nm.ok) { stencil_ok = false; break; }
                    cx[j] = fan[s0 + j].chi;
                    cm[j] = nm.m;
                    cd[j] = nm.d;
                    cvx[j] = nm.v.x;
                    cvy[j] = nm.v.y;
                }
                if (stencil_ok) {
                    // root of the cubic interpolant of m(chi) inside [lo, hi]
                    auto lag = [&](const double* f, double t) {
                        double s = 0.0;
                        for (int j = 0; j < 4; ++j) {
                            double w = f[j];
                            for (int k = 0; k < 4; ++k)
                                if (k != j) w *= (t - cx[k]) / (cx[j] - cx[k]);
                            s += w;
                        }
                        return s;
                    };
                    double a = fan[lo].chi, b = fan[hi].chi;
                    double fa = lag(cm, a);
                    double root = 0.5 * (a + b);
                    for (int itn = 0; itn < 60; ++itn) {
                        root = 0.5 * (a + b);
                        double fm = lag(cm, root);
                        if ((fa <= 0) == (fm <= 0)) { a = root; fa = fm; }
                        else b = root;
                        if (b - a < 1e-14 * std::max(1.0, std::abs(a))) break;
                    }
                    value = lag(cd, root);
                    varr = {lag(cvx, root), lag(cvy, root)};
                    if (opt.polish) {
                        ShootOptions sp;
                        sp.step = opt.step;
                        sp.miss_tol = 1e-10;
                        sp.hint = root;
                        sp.drift_tol = opt.drift_tol;
                        try {
                            ShootHit hitp = shoot_to_target(metric, p, node, sp);
                            value = hitp.distance;
                            varr = hitp.v_arrive;
                        } catch (const NumericalError&) { /* keep fan value */ }
                    }
                }
            }
            if (std::isnan(value)) {
                // per-node fallback shot
                ShootOptions sp;
                sp.step = opt.step;
                sp.miss_tol = 1e-9;
                sp.hint = hint[id];
                sp.drift_tol = opt.drift_tol;
                try {
                    ShootHit hitp = shoot_to_target(metric, p, node, sp);
                    value = hitp.distance;
                    varr = hitp.v_arrive;
                    ++fallback;
                } catch (const NumericalError&) {
                    field.valid[id] = 0;
                    continue;
                }
            }
            field.values[id] = value;
            {
                MetricEval men = metric.eval(node);
                double q = men.g.quad(varr);
                if (q < 0.0) varr = varr / std::sqrt(-q);
                field.arrival_velocity[id] = varr;
            }
        }
    field.fallback_nodes = fallback;

    // gradient: finite differences of the value grid, raised by g^{-1}
    double hx = field.dx(), hy = field.dy();
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            size_t id = field.index(ix, iy);
            if (!field.valid[id]) continue;
            auto ok = [&](int jx, int jy) {
                return jx >= 0 && jy >= 0 && jx < nx && jy < ny &&
                       field.valid[field.index(jx, jy)];
            };
            double ux, uy;
            bool one_sided = false;
            if (ok(ix - 1, iy) && ok(ix + 1, iy)) {
                ux = (field.values[field.index(ix + 1, iy)] -
                      field.values[field.index(ix - 1, iy)]) / (2 * hx);
            } else if (ok(ix + 1, iy) && ok(ix + 2, iy)) {
                ux = (-1.5 * field.values[id] +
                      2.0 * field.values[field.index(ix + 1, iy)] -
                      0.5 * field.values[field.index(ix + 2, iy)]) / hx;
                one_sided = true;
            } else if (ok(ix - 1, iy) && ok(ix - 2, iy)) {
                ux = (1.5 * field.values[id] -
                      2.0 * field.values[field.index(ix - 1, iy)] +
                      0.5 * field.values[field.index(ix - 2, iy)]) / hx;
                one_sided = true;
            } else {
                field.valid[id] = 0; // cannot form a gradient
                continue;
            }
            if (ok(ix, iy - 1) && ok(ix, iy + 1)) {
                uy = (field.values[field.index(ix, iy + 1)] -
                      field.values[field.index(ix, iy - 1)]) / (2 * hy);
            } else if (ok(ix, iy + 1) && ok(ix, iy + 2)) {
                uy = (-1.5 * field.values[id] +
                      2.0 * field.values[field.index(ix, iy + 1)] -
                      0.5 * field.values[field.index(ix, iy + 2)]) / hy;
                one_sided = true;
            } else if (ok(ix, iy - 1) && ok(ix, iy - 2)) {
                uy = (1.5 * field.values[id] -
                      2.0 * field.values[field.index(ix, iy - 1)] +
                      0.5 * field.values[field.index(ix, iy - 2)]) / hy;
                one_sided = true;
            } else {
                field.valid[id] = 0;
                continue;
            }
            MetricEval me = metric.eval(field.node(ix, iy));
            field.gradient[id] = me.g_inv.mul(Vec2{ux, uy});
            field.one_sided[id] = one_sided ? 1 : 0;
        }
    return field;
}

//----------------------------------------------------------------------------
// Eikonal residual report.

struct EikonalReport {
    double max_residual = 0.0;      // over interior (two-sided) valid nodes
    double max_residual_all = 0.0;  // including one-sided boundary nodes
    double mean_residual = 0.0;
    int n_interior = 0;
    int n_valid = 0;
    int worst_ix = -1, worst_iy = -1;
    Vec2 worst_node;
};

template <MetricModel M>
EikonalReport verify_eikonal(const ScalarField& field, const M& metric) {
    EikonalReport rep;
    double sum = 0.0;
    for (int iy = 0; iy < field.ny; ++iy)
        for (int ix = 0; ix < field.nx; ++ix) {
            size_t id = field.index(ix, iy);
            if (!field.valid[id]) continue;
            ++rep.n_valid;
            MetricEval me = metric.eval(field.node(ix, iy));
            double r = std::abs(me.g.quad(field.gradient[id]) + 1.0);
            rep.max_residual_all = std::max(rep.max_residual_all, r);
            if (!field.one_sided[id]) {
                ++rep.n_interior;
                sum += r;
                if (r > rep.max_residual) {
                    rep.max_residual = r;
                    rep.worst_ix = ix;
                    rep.worst_iy = iy;
                    rep.worst_node = field.node(ix, iy);
                }
            }
        }
    require(rep.n_valid > 0, "verify_eikonal: field has no valid nodes");
    rep.mean_residual = rep.n_interior ? sum / rep.n_interior : 0.0;
    return rep;
}

//----------------------------------------------------------------------------
// Empirical constants of the quantitative theory, with sampling protocols.

struct EmpiricalConstants {
    double epsilon = 0.0;
    double B = 0.0;
    double K_over_delta = 0.0;
    double L_eps = 0.0;
    double delta_eps = 0.0;
    std::optional<double> Q;  // filled by pole-sequence construction
    std::optional<double> H;  // filled by Hessian probing
    std::string protocol_B, protocol_K, protocol_L, protocol_delta;
    // witnesses
    Vec2 delta_witness_point, delta_witness_velocity;
    Vec2 L_witness_x, L_witness_y;
};

// Samples maximizing segments whose chords lie in the epsilon-interior of
// the cone with Euclidean chord length >= min_chord, and measures:
//   delta(eps): min normalized Euclidean distance of segment velocities to
//               the pointwise null cone,
//   L(eps):     max finite-difference slope of d under endpoint shifts,
//   K/delta:    max |v| over unit timelike vectors at cone margin delta.
template <MetricModel M>
EmpiricalConstants estimate_constants(const M& metric, double epsilon,
                                      int n_samples, uint64_t seed = 2026,
                                      const ConeEstimate* cone_in = nullptr) {
    require(epsilon > 0.0 && epsilon < 1.0, "estimate_constants: 0 < epsilon < 1");
    require(n_samples >= 100, "estimate_constants: n_samples >= 100");

    ConeEstimate cone_local;
    const ConeEstimate* cone = cone_in;
    if (!cone) {
        cone_local = estimate_cone(metric, 100.0, 2e-3);
        cone = &cone_local;
    }

    EmpiricalConstants out;
    out.epsilon = epsilon;
    const double min_chord = 5.0;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> upos(0.0, 1.0);
    std::uniform_real_distribution<double> uboost(-2.5, 2.5);

    // velocity margin to the pointwise null cone, normalized
    auto vel_margin = [&](Vec2 pos, Vec2 v) {
        auto nd = null_directions_at(metric, pos);
        Vec2 vn = normalized(v);
        return std::min(dist_to_ray(vn, nd[0]), dist_to_ray(vn, nd[1]));
    };

    out.delta_eps = std::numeric_limits<double>::infinity();
    out.L_eps = 0.0;
    int accepted = 0;
    int tries = 0;
    const double fd = 0.05; // endpoint shift for the Lipschitz slope
    while (accepted < n_samples && tries < 40 * n_samples) {
        ++tries;
        Vec2 x{upos(rng), upos(rng)};
        double chi = uboost(rng);
        Frame fr = future_frame_at(metric, x);
        Vec2 v = std::cosh(chi) * fr.T + std::sinh(chi) * fr.E;
        IntegrateOptions io;
        io.step = 0.01;
        io.drift_tol = 1e-3;
        io.stop = [&](double, Vec2 q, Vec2) { return (q - x).norm() >= min_chord * 1.2; };
        Geodesic g = integrate_geodesic(metric, x, v, 60.0 * min_chord, io);
        Vec2 y = g.end_point();
        Vec2 h = y - x;
        if (h.norm() < min_chord) continue;
        if (cone_margin(*cone, h) < epsilon) continue;
        ++accepted;

        for (const auto& s : g.samples)
            out.delta_eps = std::min(out.delta_eps, vel_margin(s.p, s.v));
        if (out.delta_eps == std::numeric_limits<double>::infinity() ||
            vel_margin(x, v) < out.delta_eps) {
            out.delta_witness_point = x;
            out.delta_witness_velocity = v;
        }

        // Lipschitz slope: shift x along +-e1, +-e2 where the chord stays
        // admissible, difference the distances via warm shooting
        double d0 = g.g_length;
        static const Vec2 dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const Vec2& e : dirs) {
            Vec2 xs = x + fd * e;
            Vec2 hs = y - xs;
            if (cone_margin(*cone, hs) < epsilon) continue;
            DistanceOptions dopt;
            dopt.cone = cone;
            MetricEval me_xs = metric.eval(xs);
            detail::ChordBoost cb = detail::boost_of_chord(me_xs, hs);
            if (!cb.inside) continue;
            dopt.hint = cb.chi;
            dopt.step = 0.01;
            dopt.fine_step = 0.01;
            DistanceResult dr = lorentz_distance(metric, xs, y, dopt);
            if (dr.status != CausalStatus::timelike) continue;
            double slope = std::abs(dr.value - d0) / fd;
            if (slope > out.L_eps) {
                out.L_eps = slope;
                out.L_witness_x = xs;
                out.L_witness_y = y;
            }
        }
    }
    if (!(accepted > 0))
        throw NoConvergence("estimate_constants: no admissible sample found");

    // K/delta: sup |v| over unit timelike vectors with velocity margin
    // >= delta(eps), scanned over boosts at sampled points
    double K = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Vec2 pos{upos(rng), upos(rng)};
        Frame fr = future_frame_at(metric, pos);
        for (int i = 0; i <= 200; ++i) {
            double chi = -6.0 + 12.0 * i / 200;
            Vec2 v = std::cosh(chi) * fr.T + std::sinh(chi) * fr.E;
            if (vel_margin(pos, v) >= out.delta_eps)
                K = std::max(K, v.norm());
        }
    }
    out.K_over_delta = K;

    out.B = estimate_B(metric, std::max(100, n_samples), seed + 1).B;

    out.protocol_B = "max euclid_length/chord over random timelike segments, boosts in [-3,3], horizons 0.5-8";
    out.protocol_delta = "min normalized velocity distance to the pointwise null cone over maximizers with chord in the epsilon-interior, chord >= 5";
    out.protocol_K = "max |v| over unit timelike boosts in [-6,6] at sampled points with velocity margin >= delta(eps)";
    out.protocol_L = "max |d(x+fd e, y) - d(x,y)|/fd over admissible shifted pairs, fd = 0.05";
    return out;
}

} // namespace teik

#endif
