// teik - geodesic integration, conjugate points, two-point shooting
//
// Fixed-step classical RK4 throughout: reproducible step sequences matter
// more here than adaptive efficiency, and the conserved g(v,v) along
// geodesics gives a built-in integrity monitor (norm drift).
#ifndef TEIK_GEODESIC_HPP
#define TEIK_GEODESIC_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "core.hpp"
#include "metric.hpp"

namespace teik {

struct GeodesicSample {
    double t;
    Vec2 p;
    Vec2 v;
};

struct Geodesic {
    std::vector<GeodesicSample> samples;
    double step = 0.0;
    double g_length = 0.0;      // integral of sqrt(max(0, -g(v,v)))
    double euclid_length = 0.0; // integral of |v|
    double norm_drift = 0.0;    // max |g(v,v) - g(v0,v0)| over samples
    double initial_norm = 0.0;

    double t_begin() const { return samples.front().t; }
    double t_end() const { return samples.back().t; }
    Vec2 end_point() const { return samples.back().p; }
    Vec2 end_velocity() const { return samples.back().v; }

    // Cubic Hermite interpolation inside the sample grid.
    GeodesicSample at(double t) const {
        const auto& s = samples;
        if (t <= s.front().t) return s.front();
        if (t >= s.back().t) return s.back();
        size_t hi = size_t(std::upper_bound(s.begin(), s.end(), t,
                       [](double a, const GeodesicSample& b) { return a < b.t; }) - s.begin());
        const GeodesicSample& a = s[hi - 1];
        const GeodesicSample& b = s[hi];
        double h = b.t - a.t;
        double u = (t - a.t) / h;
        double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        double h10 = u * (1 - u) * (1 - u);
        double h01 = u * u * (3 - 2 * u);
        double h11 = u * u * (u - 1);
        GeodesicSample out;
        out.t = t;
        out.p = h00 * a.p + (h10 * h) * a.v + h01 * b.p + (h11 * h) * b.v;
        out.v = (1 - u) * a.v + u * b.v;
        return out;
    }
};

namespace detail {

struct PV {
    Vec2 p, v;
};

template <MetricModel M>
inline PV geo_rhs(const M& m, const PV& s) {
    MetricEval me = m.eval(s.p);
    const auto& G = me.christoffel;
    double vx = s.v.x, vy = s.v.y;
    return {s.v,
            {-(G[0][0][0] * vx * vx + 2.0 * G[0][0][1] * vx * vy + G[0][1][1] * vy * vy),
             -(G[1][0][0] * vx * vx + 2.0 * G[1][0][1] * vx * vy + G[1][1][1] * vy * vy)}};
}

template <MetricModel M>
inline PV rk4_step(const M& m, const PV& s, double h) {
    PV k1 = geo_rhs(m, s);
    PV k2 = geo_rhs(m, {s.p + (0.5 * h) * k1.p, s.v + (0.5 * h) * k1.v});
    PV k3 = geo_rhs(m, {s.p + (0.5 * h) * k2.p, s.v + (0.5 * h) * k2.v});
    PV k4 = geo_rhs(m, {s.p + h * k3.p, s.v + h * k3.v});
    return {s.p + (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
            s.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

} // namespace detail

struct IntegrateOptions {
    double step = 1e-3;
    double drift_tol = 1e-6;  // IntegrationError beyond this
    // Optional early stop, checked after each accepted step.
    std::function<bool(double, Vec2, Vec2)> stop;
    size_t max_steps = 200000000;
};

// Integrates p' = v, v' = -Gamma(v, v) from (p0, v0) for affine time
// `horizon` (last step may be fractional).  Samples are stored at every step.
template <MetricModel M>
Geodesic integrate_geodesic(const M& metric, Vec2 p0, Vec2 v0, double horizon,
                            const IntegrateOptions& opt = {}) {
    require(horizon >= 0.0, "integrate_geodesic: horizon >= 0");
    require(opt.step > 0.0, "integrate_geodesic: step > 0");

    Geodesic out;
    out.step = opt.step;
    out.initial_norm = metric.eval(p0).g.quad(v0);
    size_t n_steps = size_t(std::ceil(horizon / opt.step - 1e-12));
    out.samples.reserve(std::min(n_steps, size_t(4000000)) + 2);

    detail::PV s{p0, v0};
    double t = 0.0;
    out.samples.push_back({t, s.p, s.v});

    double q0 = out.initial_norm;
    double prev_glen = std::sqrt(std::max(0.0, -q0));
    double prev_elen = v0.norm();

    while (t < horizon - 1e-12 * std::max(1.0, horizon)) {
        double h = std::min(opt.step, horizon - t);
        s = detail::rk4_step(metric, s, h);
        t += h;

        double q = metric.eval(s.p).g.quad(s.v);
        double drift = std::abs(q - q0);
        out.norm_drift = std::max(out.norm_drift, drift);
        if (drift > opt.drift_tol)
            throw IntegrationError("geodesic norm drift " + std::to_string(drift) +
                                   " exceeds " + std::to_string(opt.drift_tol) +
                                   " at t=" + std::to_string(t));

        double gl = std::sqrt(std::max(0.0, -q));
        double el = s.v.norm();
        out.g_length += 0.5 * h * (prev_glen + gl);
        out.euclid_length += 0.5 * h * (prev_elen + el);
        prev_glen = gl;
        prev_elen = el;

        out.samples.push_back({t, s.p, s.v});
        if (out.samples.size() > opt.max_steps)
            throw IntegrationError("geodesic exceeded max step count");
        if (opt.stop && opt.stop(t, s.p, s.v)) break;
    }
    return out;
}

//----------------------------------------------------------------------------
// Jacobi equation and conjugate points.
//
// Along a unit timelike geodesic of a Lorentzian surface the scalar Jacobi
// equation is J'' + JACOBI_SIGN * K * J = 0 with K the Brioschi Gauss
// curvature.  The sign is fixed by a closed-form oracle (the warped metric
// dx^2 - cosh(x)^2 dy^2 has K = -1 and first conjugate point at t = pi along
// x = 0), not taken from any convention; see the geodesic test suite.

inline constexpr double JACOBI_SIGN = -1.0;

struct ConjugateReport {
    bool found_conjugate = false;
    double first_conjugate = std::numeric_limits<double>::quiet_NaN();
    double jacobi_min_abs = std::numeric_limits<double>::infinity();
    double horizon = 0.0;
};

namespace detail {

// Refines a sign change of the cubic Hermite interpolant of (J, J') over
// [0, h] by bisection; returns the offset in [0, h].
inline double hermite_zero(double J0, double dJ0, double J1, double dJ1, double h) {
    auto f = [&](double u) {
        double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        double h10 = u * (1 - u) * (1 - u);
        double h01 = u * u * (3 - 2 * u);
        double h11 = u * u * (u - 1);
        return h00 * J0 + h10 * h * dJ0 + h01 * J1 + h11 * h * dJ1;
    };
    double lo = 0.0, hi = 1.0, flo = f(lo);
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) { lo = mid; flo = fm; }
        else hi = mid;
    }
    return 0.5 * (lo + hi) * h;
}

// Shared scan: integrates J'' = -coef(t, p) * J together with the base curve
// and reports the first zero of J after the initial one at t = 0.
template <class CoefFn, MetricModel M>
ConjugateReport jacobi_scan_impl(const M& metric, Vec2 p0, Vec2 v0, double horizon,
                                 double step, CoefFn coef) {
    ConjugateReport rep;
    rep.horizon = horizon;
    if (horizon <= 0.0) return rep; // vacuous

    struct State { PV pv; double J, dJ; };
    auto rhs = [&](const State& s) {
        PV d = geo_rhs(metric, s.pv);
        double c = coef(s.pv.p);
        return State{d, s.dJ, -c * s.J};
    };
    auto add = [](const State& a, double h, const State& b) {
        return State{{a.pv.p + h * b.pv.p, a.pv.v + h * b.pv.v},
                     a.J + h * b.J, a.dJ + h * b.dJ};
    };

    State s{{p0, v0}, 0.0, 1.0};
    double t = 0.0;
    double prevJ = s.J, prevdJ = s.dJ;
    while (t < horizon - 1e-12 * std::max(1.0, horizon)) {
        double h = std::min(step, horizon - t);
        State k1 = rhs(s);
        State k2 = rhs(add(s, 0.5 * h, k1));
        State k3 = rhs(add(s, 0.5 * h, k2));
        State k4 = rhs(add(s, h, k3));
        State sum{{(k1.pv.p + 2.0 * k2.pv.p + 2.0 * k3.pv.p + k4.pv.p),
                   (k1.pv.v + 2.0 * k2.pv.v + 2.0 * k3.pv.v + k4.pv.v)},
                  k1.J + 2.0 * k2.J + 2.0 * k3.J + k4.J,
                  k1.dJ + 2.0 * k2.dJ + 2.0 * k3.dJ + k4.dJ};
        s = add(s, h / 6.0, sum);
        double t_next = t + h;

        if (t > 0.0) { // skip the forced zero at launch
            rep.jacobi_min_abs = std::min(rep.jacobi_min_abs, std::abs(prevJ));
            if (prevJ > 0.0 && s.J <= 0.0) {
                rep.found_conjugate = true;
                rep.first_conjugate = t + hermite_zero(prevJ, prevdJ, s.J, s.dJ, h);
                return rep;
            }
        }
        prevJ = s.J;
        prevdJ = s.dJ;
        t = t_next;
    }
    rep.jacobi_min_abs = std::min(rep.jacobi_min_abs, std::abs(s.J));
    return rep;
}

struct TrivialFlatMetric {
    MetricEval eval(Vec2) const {
        MetricEval me;
        me.g = {1.0, 0.0, -1.0};
        me.g_inv = {1.0, 0.0, -1.0};
        me.dg[0] = me.dg[1] = {0.0, 0.0, 0.0};
        for (auto& a : me.christoffel) for (auto& b : a) for (auto& c : b) c = 0.0;
        return me;
    }
};

} // namespace detail

// Scans for the first parameter conjugate to 0 along the geodesic from p
// with unit timelike velocity v (J(0) = 0, J'(0) = 1; first sign change of J
// refined to ~1e-8).  In two dimensions a pair of conjugate points anywhere
// on the segment forces a zero of this J by Sturm separation, so scanning
// the single solution is exhaustive.
template <MetricModel M>
ConjugateReport jacobi_conjugate_scan(const M& metric, Vec2 p, Vec2 v,
                                      double horizon, double step = 1e-3) {
    double q = metric.eval(p).g.quad(v);
    require(std::abs(q + 1.0) < 1e-8, "jacobi_conjugate_scan: v must be unit timelike");
    return detail::jacobi_scan_impl(metric, p, v, horizon, step, [&](Vec2 pos) {
        return JACOBI_SIGN * metric.eval(pos).gauss_curvature;
    });
}

// Test hook: J'' + K0 * J = 0 with constant K0 (no metric involved).
// K0 > 0 oscillates with first zero at pi / sqrt(K0).
inline ConjugateReport jacobi_scan_constant(double K0, double horizon, double step = 1e-3) {
    detail::TrivialFlatMetric flat;
    return detail::jacobi_scan_impl(flat, Vec2{0, 0}, Vec2{0, 1}, horizon, step,
                                    [K0](Vec2) { return K0; });
}

//----------------------------------------------------------------------------
// Timelike poles: no conjugate pair on any timelike geodesic through p.

struct PoleReport {
    bool is_pole_up_to_horizon = true;
    double horizon = 0.0;
    int directions_checked = 0;
    double first_conjugate = std::numeric_limits<double>::quiet_NaN();
    Vec2 worst_direction{0.0, 0.0};  // smallest first conjugate, or smallest |J|
    double worst_min_abs = std::numeric_limits<double>::infinity();
};

// Samples n directions uniformly in Euclidean angle across the future cone
// (and their past reflections), normalizes each to g(v,v) = -1 and scans.
template <MetricModel M>
PoleReport pole_check(const M& metric, Vec2 p, double horizon,
                      int n_directions = 32, double step = 1e-3) {
    require(n_directions >= 1, "pole_check: n_directions >= 1");
    PoleReport rep;
    rep.horizon = horizon;
    if (horizon <= 0.0) return rep;

    MetricEval me = metric.eval(p);
    auto nd = MetricSpec::null_directions_from(me);
    double th0 = std::atan2(nd[0].y, nd[0].x);
    double th1 = std::atan2(nd[1].y, nd[1].x);
    if (th1 < th0) th1 += two_pi;

    for (int k = 0; k < n_directions; ++k) {
        double th = th0 + (k + 0.5) / n_directions * (th1 - th0);
        Vec2 dir{std::cos(th), std::sin(th)};
        double q = me.g.quad(dir);
        if (!(q < 0.0)) continue; // grazing the cone within roundoff
        Vec2 v = dir / std::sqrt(-q);
        for (int flip = 0; flip < 2; ++flip) {
            Vec2 vv = flip ? -v : v;
            ConjugateReport cr = jacobi_conjugate_scan(metric, p, vv, horizon, step);
            ++rep.directions_checked;
            if (cr.found_conjugate) {
                rep.is_pole_up_to_horizon = false;
                if (!(cr.first_conjugate >= rep.first_conjugate)) {
                    rep.first_conjugate = cr.first_conjugate;
                    rep.worst_direction = vv;
                }
            } else if (cr.jacobi_min_abs < rep.worst_min_abs) {
                rep.worst_min_abs = cr.jacobi_min_abs;
                if (rep.is_pole_up_to_horizon) rep.worst_direction = vv;
            }
        }
    }
    return rep;
}

//----------------------------------------------------------------------------
// Two-point shooting.  Directions in the open future cone at x are
// parameterized by the boost angle chi: v(chi) = cosh(chi) T + sinh(chi) E,
// which sweeps all unit future timelike vectors as chi runs over R.

struct ShootOptions {
    double step = 1e-3;
    double miss_tol = 1e-9;   // Euclidean closest-approach tolerance
    double chi_max = 8.0;
    int sweep = 33;           // cold-start bracket resolution
    std::optional<double> hint; // warm-start boost angle
    double drift_tol = 1e-4;  // loose during the search phase
    int max_refine = 80;
    // On curved metrics the interpolated closest approach shifts its sample
    // window as chi varies, so the signed miss can jump through zero instead
    // of crossing it; a collapsed bracket whose residual is below this is
    // accepted (the endpoint correction keeps the distance accurate to
    // O(miss^2)).  Larger residuals mark a spurious bracket: the side of the
    // ray flips as the fan sweeps past an unreachable target's bearing.
    double miss_accept = 1e-4;
};

struct ShootHit {
    double chi = 0.0;
    double t_arrive = 0.0;     // affine parameter at closest approach
    Vec2 p_arrive, v_arrive;
    double miss = 0.0;         // Euclidean distance to target at arrival
    double distance = 0.0;     // g-length to target, endpoint-corrected
    Vec2 launch_velocity;
    bool ambiguous = false;    // second distinct connection of equal length
};

namespace detail {

struct MissEval {
    double signed_miss = 0.0;
    double t_closest = 0.0;
    Vec2 p_closest, v_closest;
    bool valid = false;
};

// Integrates from x with boost chi until the depth along the chord direction
// exceeds the target depth (plus padding), then measures the signed
// Euclidean miss at the closest approach.  Sign is the side of the curve the
// target lies on, so it flips as the fan sweeps across the target.
template <MetricModel M>
MissEval eval_miss(const M& metric, const Frame& fr, Vec2 x, Vec2 y, double chi,
                   const ShootOptions& opt, Geodesic* keep = nullptr) {
    Vec2 chord = y - x;
    double depth = chord.norm();
    Vec2 u = chord / depth;
    double pad = std::max(2.0 * opt.step, 0.05 * depth) + 10.0 * opt.step;

    Vec2 v0 = std::cosh(chi) * fr.T + std::sinh(chi) * fr.E;
    // Boosted bearings move fast in coordinates, so scale the affine step
    // (and the cap) by the coordinate speed: the resolution along the track
    // and the total step count then stay uniform across the whole fan.
    double speed = std::max(1.0, v0.norm());
    IntegrateOptions io;
    io.step = opt.step / speed;
    io.drift_tol = opt.drift_tol;
    io.stop = [&](double, Vec2 p, Vec2) { return dot(p - x, u) >= depth + pad; };
    // progress along the chord can be slow near the cone edge; cap generously
    double t_cap = 64.0 * (depth + 1.0) / speed;
    Geodesic g = integrate_geodesic(metric, x, v0, t_cap, io);

    MissEval me;
    const auto& s = g.samples;
    size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.size(); ++i) {
        double d2 = (s[i].p - y).norm2();
        if (d2 < bd) { bd = d2; best = i; }
    }
    double t_star = s[best].t;
    if (best > 0 && best + 1 < s.size()) {
        // parabola through the three distance^2 samples around the minimum
        double t0 = s[best - 1].t, t1 = s[best].t, t2 = s[best + 1].t;
        double f0 = (s[best - 1].p - y).norm2();
        double f1 = (s[best].p - y).norm2();
        double f2 = (s[best + 1].p - y).norm2();
        double d01 = (f1 - f0) / (t1 - t0), d12 = (f2 - f1) / (t2 - t1);
        double dd = (d12 - d01) / (t2 - t0);
        if (dd > 0.0) {
            double tv = 0.5 * (t0 + t1) - 0.5 * d01 / dd;
            t_star = std::clamp(tv, t0, t2);
        }
    }
    GeodesicSample cl = g.at(t_star);
    me.t_closest = t_star;
    me.p_closest = cl.p;
    me.v_closest = cl.v;
    double miss = (y - cl.p).norm();
    double side = cross(cl.v, y - cl.p);
    me.signed_miss = (side >= 0.0 ? miss : -miss);
    me.valid = true;
    if (keep) {
        *keep = std::move(g);
        // truncate at the closest approach
        auto& ks = keep->samples;
        while (ks.size() > 1 && ks.back().t > t_star) ks.pop_back();
        if (ks.back().t < t_star - 1e-15) ks.push_back(cl);
    }
    return me;
}

} // namespace detail

// Finds chi with |miss(chi)| < miss_tol.  Cold start sweeps `opt.sweep`
// angles over [-chi_max, chi_max]; a warm start expands a bracket around the
// hint.  Secant refinement with bisection fallback.  The returned distance
// carries the first-order endpoint correction
//   d(x, y) ~ t* - <g v(t*), y - p(t*)>
// (the differential of d(x, .) at the arrival point is -g(v*, .), the
// lowered past-pointing unit tangent), exact to O(miss^2), so the shot needs
// the miss small but not zero.
template <MetricModel M>
ShootHit shoot_to_target(const M& metric, Vec2 x, Vec2 y,
                         const ShootOptions& opt = {}) {
    Frame fr = future_frame_at(metric, x);
    require((y - x).norm() > 0.0, "shoot_to_target: distinct points required");

    auto miss_at = [&](double chi) {
        return detail::eval_miss(metric, fr, x, y, chi, opt).signed_miss;
    };

    // collect brackets
    std::vector<std::pair<double, double>> brackets; // (chi_lo, chi_hi)
    if (opt.hint) {
        double c0 = *opt.hint;
        double m0 = miss_at(c0);
        double delta = 0.02;
        bool found = false;
        for (int k = 0; k < 24 && !found; ++k) {
            for (double sgn : {+1.0, -1.0}) {
                double c1 = c0 + sgn * delta;
                if (std::abs(c1) > opt.chi_max) continue;
                double m1 = miss_at(c1);
                if ((m0 <= 0) != (m1 <= 0)) {
                    brackets.emplace_back(std::min(c0, c1), std::max(c0, c1));
                    found = true;
                    break;
                }
            }
            delta *= 1.7;
        }
        if (!found)
            throw NoBracket("shoot_to_target: warm start found no sign change near hint");
    } else {
        int n = std::max(opt.sweep, 5);
        double prev_chi = -opt.chi_max;
        double prev_m = miss_at(prev_chi);
        for (int i = 1; i < n; ++i) {
            double chi = -opt.chi_max + 2.0 * opt.chi_max * i / (n - 1);
            double m = miss_at(chi);
            if ((prev_m <= 0) != (m <= 0)) brackets.emplace_back(prev_chi, chi);
            prev_chi = chi;
            prev_m = m;
        }
        if (brackets.empty())
            throw NoBracket("shoot_to_target: no sign change across the cone");
    }

    ShootHit best;
    bool have = false;
    double second_best = -std::numeric_limits<double>::infinity();
    for (auto [lo, hi] : brackets) {
        double flo = miss_at(lo), fhi = miss_at(hi);
        double a = lo, b = hi, fa = flo, fb = fhi;
        double c = a, fc = fa;
        bool ok = false;
        for (int it = 0; it < opt.max_refine; ++it) {
            // secant candidate, clipped into the bracket; bisect on stall
            double cand = b - fb * (b - a) / (fb - fa);
            if (!(cand > std::min(a, b) && cand < std::max(a, b)))
                cand = 0.5 * (a + b);
            fc = miss_at(cand);
            c = cand;
            if (std::abs(fc) < opt.miss_tol) { ok = true; break; }
            if ((fa <= 0) != (fc <= 0)) { b = c; fb = fc; }
            else { a = c; fa = fc; }
            if (std::abs(b - a) < 1e-15) break;
        }
        if (!ok && std::abs(fc) >= opt.miss_tol) {
            if (std::abs(fc) > opt.miss_accept) continue; // spurious bracket
            // collapsed onto an interpolation jump: accept the root, the
            // endpoint correction absorbs the residual quadratically
        }
        Geodesic seg;
        detail::MissEval fin = detail::eval_miss(metric, fr, x, y, c, opt, &seg);
        MetricEval at_cl = metric.eval(fin.p_closest);
        double dist = fin.t_closest - at_cl.g.bilin(fin.v_closest, y - fin.p_closest);
        if (!have || dist > best.distance) {
            if (have) second_best = std::max(second_best, best.distance);
            best.chi = c;
            best.t_arrive = fin.t_closest;
            best.p_arrive = fin.p_closest;
            best.v_arrive = fin.v_closest;
            best.miss = std::abs(fin.signed_miss);
            best.distance = dist;
            best.launch_velocity = std::cosh(c) * fr.T + std::sinh(c) * fr.E;
            have = true;
        } else {
            second_best = std::max(second_best, dist);
        }
    }
    if (!have)
        throw NoBracket("shoot_to_target: every bracket was a bearing flip "
                        "past an unreachable target");
    if (second_best > best.distance - 1e-9) best.ambiguous = true;
    return best;
}

} // namespace teik

#endif
