// teik - lightlike direction fields, the stable time cone, asymptotic
// directions of causal curves, and the Euclidean-vs-chord length constant.
#ifndef TEIK_CAUSAL_HPP
#define TEIK_CAUSAL_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "core.hpp"
#include "geodesic.hpp"
#include "metric.hpp"

namespace teik {

enum class NullFamily { minus, plus };

// Stable time cone: the convex cone spanned by the asymptotic directions of
// the two future null foliations.  Positively oriented pair (m_minus left of
// m_plus is false: m_plus lies counter-clockwise FROM m_minus).
struct ConeEstimate {
    Vec2 m_minus, m_plus;       // Euclidean unit vectors
    double deviation_bound_D = 0.0; // max chord-to-ray distance seen
    double integration_length = 0.0;
};

struct DirectionEstimate {
    Vec2 alpha;                 // unit chord direction
    double D = 0.0;             // sup distance of sample chords to the ray
    double confidence_length = 0.0; // Euclidean length backing the estimate
};

// Integrates the unit-Euclidean-speed curve whose velocity is the future
// null direction of the chosen family at each point.  Parameter = Euclidean
// arclength.  Velocities stored are the pointwise field values, so the null
// residual measures frame quality, and positional error is the RK4 error of
// the direction-field flow.
template <MetricModel M>
Geodesic integrate_null_curve(const M& metric, Vec2 p, NullFamily family,
                              double length, double step = 1e-3) {
    require(length > 0.0, "integrate_null_curve: length > 0");
    require(step > 0.0, "integrate_null_curve: step > 0");

    auto dir = [&](Vec2 q) {
        auto nd = null_directions_at(metric, q);
        return family == NullFamily::minus ? nd[0] : nd[1];
    };

    Geodesic out;
    out.step = step;
    Vec2 pos = p;
    double t = 0.0;
    out.samples.push_back({t, pos, dir(pos)});
    out.initial_norm = metric.eval(pos).g.quad(out.samples[0].v);

    size_t n = size_t(std::ceil(length / step - 1e-12));
    out.samples.reserve(n + 2);
    while (t < length - 1e-12 * std::max(1.0, length)) {
        double h = std::min(step, length - t);
        Vec2 k1 = dir(pos);
        Vec2 k2 = dir(pos + (0.5 * h) * k1);
        Vec2 k3 = dir(pos + (0.5 * h) * k2);
        Vec2 k4 = dir(pos + h * k3);
        pos += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        Vec2 v = dir(pos);
        double q = metric.eval(pos).g.quad(v);
        out.norm_drift = std::max(out.norm_drift, std::abs(q));
        out.g_length += 0.0; // lightlike by construction
        out.euclid_length += h;
        out.samples.push_back({t, pos, v});
    }
    return out;
}

// Chord directions of one long null curve per family, launched at the
// origin.  Periodicity makes the rotation number independent of the start,
// so no averaging is needed; convergence is O(1/length).
template <MetricModel M>
ConeEstimate estimate_cone(const M& metric, double length = 100.0,
                           double step = 1e-3) {
    require(length >= 10.0, "estimate_cone: length >= 10");
    ConeEstimate cone;
    cone.integration_length = length;
    Vec2 m[2];
    double D = 0.0;
    for (int f = 0; f < 2; ++f) {
        Geodesic c = integrate_null_curve(
            metric, Vec2{0.0, 0.0}, f == 0 ? NullFamily::minus : NullFamily::plus,
            length, step);
        Vec2 chord = c.end_point() - c.samples.front().p;
        m[f] = normalized(chord);
        for (const auto& s : c.samples)
            D = std::max(D, dist_to_ray(s.p - c.samples.front().p, m[f]));
    }
    cone.m_minus = m[0];
    cone.m_plus = m[1];
    cone.deviation_bound_D = D;
    if (!(cross(cone.m_minus, cone.m_plus) > 1e-12))
        throw OrientationError("estimate_cone: chord directions not positively oriented");
    if (cone.m_minus.y < 0.0 || cone.m_plus.y < 0.0)
        throw OrientationError("estimate_cone: cone leaves the upper half-plane");
    return cone;
}

// Exact planar test: h lies in the closed convex cone spanned by m^- and
// m^+, with Euclidean distance to both boundary rays >= epsilon * |h|.
inline bool cone_membership(const ConeEstimate& cone, Vec2 h, double epsilon) {
    require(epsilon >= 0.0, "cone_membership: epsilon >= 0");
    double n = h.norm();
    if (n == 0.0) return false;
    if (cross(cone.m_minus, h) < 0.0) return false;
    if (cross(h, cone.m_plus) < 0.0) return false;
    return dist_to_ray(h, cone.m_minus) >= epsilon * n &&
           dist_to_ray(h, cone.m_plus) >= epsilon * n;
}

// Margin variant: distance to the cone boundary in units of |h| (negative
// outside).  cone_membership(h, eps) == (cone_margin(h) >= eps) for h inside.
inline double cone_margin(const ConeEstimate& cone, Vec2 h) {
    double n = h.norm();
    if (n == 0.0) return -1.0;
    if (cross(cone.m_minus, h) < 0.0 || cross(h, cone.m_plus) < 0.0) {
        double d = std::min(dist_to_ray(h, cone.m_minus), dist_to_ray(h, cone.m_plus));
        return -d / n;
    }
    return std::min(dist_to_ray(h, cone.m_minus), dist_to_ray(h, cone.m_plus)) / n;
}

// Chord direction of a sampled causal curve plus the deviation constant D:
// the sup over sample pairs (s < t) of the distance from gamma(t) - gamma(s)
// to the ray through alpha.  All-pairs is quadratic, so pairs follow a
// deterministic dyadic schedule (every gap 2^j, strided by 2^{j-1}), which
// covers all scales in O(n) pairs.
inline DirectionEstimate asymptotic_direction(const std::vector<GeodesicSample>& samples,
                                              double euclid_length) {
    require(samples.size() >= 2, "asymptotic_direction: need >= 2 samples");
    require(euclid_length >= 10.0, "asymptotic_direction: Euclidean length >= 10");

    // cap the index set so very fine integrations do not dominate runtime
    std::vector<size_t> idx;
    size_t n = samples.size();
    size_t cap = 4096;
    size_t stride = (n + cap - 1) / cap;
    for (size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);

    DirectionEstimate de;
    de.alpha = normalized(samples[n - 1].p - samples[0].p);
    de.confidence_length = euclid_length;

    size_t m = idx.size();
    for (size_t gap = 1; gap < m; gap *= 2) {
        size_t str = std::max<size_t>(1, gap / 2);
        for (size_t i = 0; i + gap < m; i += str) {
            Vec2 chord = samples[idx[i + gap]].p - samples[idx[i]].p;
            de.D = std::max(de.D, dist_to_ray(chord, de.alpha));
        }
    }
    return de;
}

inline DirectionEstimate asymptotic_direction(const Geodesic& curve) {
    return asymptotic_direction(curve.samples, curve.euclid_length);
}

// Empirical constant B with its witness: the largest ratio of Euclidean
// arclength to Euclidean endpoint distance over sampled timelike geodesic
// segments (boosts up to +-3, horizons 0.5..8, base points in one period).
struct BEstimate {
    double B = 1.0;
    Vec2 witness_base, witness_end;
    double witness_boost = 0.0;
    int n_samples = 0;
};

template <MetricModel M>
BEstimate estimate_B(const M& metric, int n_samples, uint64_t seed = 12345,
                     double step = 0.01) {
    require(n_samples >= 100, "estimate_B: n_samples >= 100");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> upos(0.0, 1.0);
    std::uniform_real_distribution<double> uboost(-3.0, 3.0);
    std::uniform_real_distribution<double> uhor(0.5, 8.0);

    BEstimate be;
    be.n_samples = n_samples;
    for (int s = 0; s < n_samples; ++s) {
        Vec2 p{upos(rng), upos(rng)};
        double chi = uboost(rng);
        double hor = uhor(rng);
        Frame fr = future_frame_at(metric, p);
        Vec2 v = std::cosh(chi) * fr.T + std::sinh(chi) * fr.E;
        IntegrateOptions io;
        io.step = step;
        io.drift_tol = 1e-4;
        Geodesic g = integrate_geodesic(metric, p, v, hor, io);
        double chord = (g.end_point() - p).norm();
        if (chord < 1e-9) continue;
        double ratio = g.euclid_length / chord;
        if (ratio > be.B) {
            be.B = ratio;
            be.witness_base = p;
            be.witness_end = g.end_point();
            be.witness_boost = chi;
        }
    }
    return be;
}

} // namespace teik

#endif
