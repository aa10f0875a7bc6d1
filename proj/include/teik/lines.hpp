// teik - periodic timelike lines (rational directions) and timelike rays of
// prescribed asymptotic direction.
#ifndef TEIK_LINES_HPP
#define TEIK_LINES_HPP

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "causal.hpp"
#include "core.hpp"
#include "geodesic.hpp"
#include "maxdist.hpp"
#include "metric.hpp"

namespace teik {

struct PeriodicLine {
    Vec2 base;
    std::array<int, 2> deck{0, 0};   // lattice vector k
    double period_length = 0.0;      // g-length over one period
    double period_parameter = 0.0;   // affine parameter a with line(a) = base + k
    Geodesic geodesic;               // one period plus ~25% margin
    double closure_defect = 0.0;     // angle(v(a), v(0))
    std::vector<double> defect_history; // diagnostics at N = 1, 2, 4
    Vec2 initial_velocity;
    Vec2 direction() const {
        return normalized(Vec2{double(deck[0]), double(deck[1])});
    }
};

struct LineOptions {
    double tol = 1e-6;       // closure-defect acceptance
    double step = 5e-3;
    double miss_tol = 1e-9;
    double drift_tol = 1e-4;
    const ConeEstimate* cone = nullptr;
    double cone_length = 100.0;
    double cone_step = 1e-3;
};

namespace detail {

inline int ivec_gcd(int a, int b) { return std::gcd(std::abs(a), std::abs(b)); }

inline double angle_between(Vec2 a, Vec2 b) {
    return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

// parameter of the closest approach of g to mark (parabola-refined)
inline double closest_pass(const Geodesic& g, Vec2 mark) {
    const auto& s = g.samples;
    size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.size(); ++i) {
        double d2 = (s[i].p - mark).norm2();
        if (d2 < bd) { bd = d2; best = i; }
    }
    double t_star = s[best].t;
    if (best > 0 && best + 1 < s.size()) {
        double t0 = s[best - 1].t, t1 = s[best].t, t2 = s[best + 1].t;
        double f0 = (s[best - 1].p - mark).norm2();
        double f1 = (s[best].p - mark).norm2();
        double f2 = (s[best + 1].p - mark).norm2();
        double d01 = (f1 - f0) / (t1 - t0), d12 = (f2 - f1) / (t2 - t1);
        double dd = (d12 - d01) / (t2 - t0);
        if (dd > 0.0)
            t_star = std::clamp(0.5 * (t0 + t1) - 0.5 * d01 / dd, t0, t2);
    }
    return t_star;
}

} // namespace detail

// Closure of the maximizer p -> p + N k under the deck identification:
// computes the maximizer for N = 1, 2, 4, each time measuring the angle
// between the velocity at the first crossing of p + k and the launch
// velocity.  A timelike pole p lies on the unique periodic line, so defects
// sit at integrator noise and the N = 1 segment is the period; decay with N
// doubles as a pole diagnostic.
template <MetricModel M>
PeriodicLine find_periodic_line(const M& metric, Vec2 p, std::array<int, 2> k,
                                const LineOptions& opt = {}) {
    require(!(k[0] == 0 && k[1] == 0), "find_periodic_line: k must be nonzero");
    require(detail::ivec_gcd(k[0], k[1]) == 1, "find_periodic_line: k must be primitive");

    Vec2 kv{double(k[0]), double(k[1])};
    ConeEstimate cone_local;
    const ConeEstimate* cone = opt.cone;
    if (!cone) {
        cone_local = estimate_cone(metric, opt.cone_length, opt.cone_step);
        cone = &cone_local;
    }
    if (!(cross(cone->m_minus, kv) > 0.0 && cross(kv, cone->m_plus) > 0.0))
        throw PreconditionError("find_periodic_line: k/|k| not strictly inside the stable cone");

    MetricEval me_p = metric.eval(p);

    PeriodicLine line;
    line.base = p;
    line.deck = k;

    ShootHit one_period;
    for (int N : {1, 2, 4}) {
        Vec2 target = p + double(N) * kv;
        ShootOptions so;
        so.step = opt.step;
        so.miss_tol = opt.miss_tol;
        so.drift_tol = opt.drift_tol;
        detail::ChordBoost cb = detail::boost_of_chord(me_p, target - p);
        if (cb.inside) so.hint = cb.chi;
        ShootHit hit = shoot_to_target(metric, p, target, so);

        // velocity at the first crossing of p + k vs the launch velocity
        IntegrateOptions io;
        io.step = opt.step;
        io.drift_tol = opt.drift_tol;
        Geodesic arc = integrate_geodesic(metric, p, hit.launch_velocity,
                                          hit.t_arrive, io);
        double t1 = detail::closest_pass(arc, p + kv);
        double defect = detail::angle_between(arc.at(t1).v, hit.launch_velocity);
        line.defect_history.push_back(defect);
        if (N == 1) one_period = hit;
    }

    double d4 = line.defect_history.back();
    if (!(d4 < opt.tol))
        throw NotClosing("find_periodic_line: closure defect " + std::to_string(d4) +
                         " above tol " + std::to_string(opt.tol) +
                         " (defects N=1,2,4: " + std::to_string(line.defect_history[0]) +
                         ", " + std::to_string(line.defect_history[1]) + ", " +
                         std::to_string(d4) + ")");

    line.period_parameter = one_period.t_arrive;
    line.period_length = one_period.distance;
    line.initial_velocity = one_period.launch_velocity;
    line.closure_defect = detail::angle_between(one_period.v_arrive,
                                                one_period.launch_velocity);

    IntegrateOptions io;
    io.step = opt.step;
    io.drift_tol = opt.drift_tol;
    line.geodesic = integrate_geodesic(metric, p, one_period.launch_velocity,
                                       1.25 * line.period_parameter, io);
    return line;
}

//----------------------------------------------------------------------------
// Rays of prescribed asymptotic direction.

struct Ray {
    Geodesic geodesic;
    DirectionEstimate direction;
    Vec2 initial_velocity;
    std::vector<std::array<int, 2>> convergents; // empty on rational delegation
    bool delegated_rational = false;
};

struct RayOptions : LineOptions {
    double rational_cap = 20.0;     // |k| below this delegates to the periodic line
    double convergent_cap = 200.0;  // continued-fraction vectors capped here
    double chord_horizon = 2000.0;  // aim distance when delegation fails
};

namespace detail {

// integer vector k with |k| <= cap exactly parallel to alpha, if any
inline bool rational_direction(Vec2 alpha, double cap, std::array<int, 2>& out) {
    int n = int(cap);
    for (int j = 0; j <= n; ++j)
        for (int i = -n; i <= n; ++i) {
            if (i == 0 && j == 0) continue;
            if (ivec_gcd(i, j) != 1) continue;
            if (std::hypot(double(i), double(j)) > cap) continue;
            if (std::abs(cross(alpha, Vec2{double(i), double(j)})) < 1e-12 &&
                dot(alpha, Vec2{double(i), double(j)}) > 0.0) {
                out = {i, j};
                return true;
            }
        }
    return false;
}

// continued-fraction convergent vectors (h, k) ~ direction alpha (alpha.y > 0),
// ordered by increasing quality, capped in Euclidean norm
inline std::vector<std::array<int, 2>> convergent_vectors(Vec2 alpha, double cap) {
    double s = alpha.x / alpha.y; // cone interiors keep alpha.y > 0
    std::vector<std::array<int, 2>> out;
    long long h2 = 0, h1 = 1; // numerators (x)
    long long k2 = 1, k1 = 0; // denominators (y)
    double frac = s;
    for (int it = 0; it < 48; ++it) {
        double fl = std::floor(frac);
        long long a = (long long)fl;
        long long h0 = a * h1 + h2;
        long long k0 = a * k1 + k2;
        if (std::hypot(double(h0), double(k0)) > cap) break;
        if (k0 > 0) out.push_back({int(h0), int(k0)});
        h2 = h1; h1 = h0;
        k2 = k1; k1 = k0;
        double rem = frac - fl;
        if (rem < 1e-15) break;
        frac = 1.0 / rem;
    }
    return out;
}

// timelike ray from p with asymptotic direction alpha, built by shooting at a
// far target along alpha (direction error decays like the deviation bound
// over the chord length: the continued-fraction route is impractical for
// directions this close to a rational)
template <MetricModel M>
Geodesic chord_ray(const M& metric, Vec2 p, Vec2 alpha, double chord_horizon,
                   double horizon, double step) {
    ShootOptions so;
    so.step = step;
    so.miss_tol = 1e-6;
    so.drift_tol = 1e-2;
    ChordBoost cb = boost_of_chord(metric.eval(p), chord_horizon * alpha);
    if (cb.inside) so.hint = cb.chi;
    ShootHit hit = shoot_to_target(metric, p, p + chord_horizon * alpha, so);
    IntegrateOptions io;
    io.step = step;
    io.drift_tol = 1e-2;
    return integrate_geodesic(metric, p, hit.launch_velocity, horizon, io);
}

} // namespace detail

// Ray from p with asymptotic direction alpha (unit, strictly inside the
// stable cone).  Exact small rational directions delegate to the periodic
// line when p lies on it; from a generic base point that line does not pass
// through p and the ray is built by aiming at a far lattice multiple
// instead.  Generic directions: periodic lines for the last three
// continued-fraction convergents of alpha, initial velocities extrapolated
// quadratically in the direction angle (they form a Cauchy family by the
// continuity of asymptotic directions), then integrated to the horizon.
template <MetricModel M>
Ray ray_toward(const M& metric, Vec2 p, Vec2 alpha, double horizon,
               const RayOptions& opt = {}) {
    require(horizon >= 10.0, "ray_toward: horizon >= 10");
    alpha = normalized(alpha);

    ConeEstimate cone_local;
    RayOptions o = opt;
    if (!o.cone) {
        cone_local = estimate_cone(metric, o.cone_length, o.cone_step);
        o.cone = &cone_local;
    }
    if (!(cross(o.cone->m_minus, alpha) > 0.0 && cross(alpha, o.cone->m_plus) > 0.0))
        throw PreconditionError("ray_toward: alpha not strictly inside the stable cone");

    Ray ray;
    IntegrateOptions io;
    io.step = o.step;
    io.drift_tol = o.drift_tol;

    std::array<int, 2> k;
    if (detail::rational_direction(alpha, o.rational_cap, k)) {
        try {
            PeriodicLine line = find_periodic_line(metric, p, k, o);
            ray.delegated_rational = true;
            ray.initial_velocity = line.initial_velocity;
            ray.geodesic =
                integrate_geodesic(metric, p, line.initial_velocity, horizon, io);
            ray.direction = asymptotic_direction(ray.geodesic);
            return ray;
        } catch (const NotClosing&) {
            // p is off the periodic line of class k: build the ray from p by
            // the long-chord construction
            ray.geodesic = detail::chord_ray(metric, p, alpha, o.chord_horizon,
                                             horizon, std::max(o.step, 0.05));
            ray.initial_velocity = ray.geodesic.samples.front().v;
            ray.direction = asymptotic_direction(ray.geodesic);
            return ray;
        }
    }

    auto cvs = detail::convergent_vectors(alpha, o.convergent_cap);
    // keep the last three convergents strictly inside the cone
    std::vector<std::array<int, 2>> used;
    for (const auto& c : cvs) {
        Vec2 cv{double(c[0]), double(c[1])};
        if (cross(o.cone->m_minus, cv) > 0.0 && cross(cv, o.cone->m_plus) > 0.0)
            used.push_back(c);
    }
    if (used.size() > 3) used.erase(used.begin(), used.end() - 3);
    if (used.empty())
        throw PreconditionError("ray_toward: no usable convergent inside the cone");

    std::vector<double> thetas;
    std::vector<Vec2> vels;
    try {
        for (const auto& c : used) {
            PeriodicLine line = find_periodic_line(metric, p, c, o);
            thetas.push_back(std::atan2(double(c[1]), double(c[0])));
            vels.push_back(line.initial_velocity);
            ray.convergents.push_back(c);
        }
    } catch (const NotClosing&) {
        // a convergent class has no periodic line through p: fall back to
        // the long-chord construction, as in the rational branch
        ray.convergents.clear();
        ray.geodesic = detail::chord_ray(metric, p, alpha, o.chord_horizon,
                                         horizon, std::max(o.step, 0.05));
        ray.initial_velocity = ray.geodesic.samples.front().v;
        ray.direction = asymptotic_direction(ray.geodesic);
        return ray;
    }

    double th = std::atan2(alpha.y, alpha.x);
    Vec2 v{0, 0};
    for (size_t j = 0; j < vels.size(); ++j) {
        double w = 1.0;
        for (size_t i = 0; i < vels.size(); ++i)
            if (i != j) w *= (th - thetas[i]) / (thetas[j] - thetas[i]);
        v += w * vels[j];
    }
    v = unit_timelike(metric, p, v);

    ray.initial_velocity = v;
    ray.geodesic = integrate_geodesic(metric, p, v, horizon, io);
    ray.direction = asymptotic_direction(ray.geodesic);

    double gap = used.size() >= 2
                     ? std::abs(thetas.back() - thetas[thetas.size() - 2])
                     : 1e-3;
    double drift = detail::angle_between(ray.direction.alpha, alpha);
    if (drift > 10.0 * gap)
        throw DirectionDrift("ray_toward: measured direction off by " +
                             std::to_string(drift) + " rad, allowed " +
                             std::to_string(10.0 * gap));
    return ray;
}

} // namespace teik

#endif
