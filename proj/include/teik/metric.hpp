// teik - Z^2-periodic Lorentzian metrics on the (x, y) plane
//
// Metric components are finite Fourier series, so derivatives are exact and
// every evaluation is deck-invariant by construction.  Signature convention:
// g22 < 0, det g < 0 everywhere ((0,1) points into the future cone).
#ifndef TEIK_METRIC_HPP
#define TEIK_METRIC_HPP

#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "fourier.hpp"

namespace teik {

enum class CausalClass {
    zero,
    future_timelike,
    past_timelike,
    future_null,
    past_null,
    spacelike,
};

inline const char* to_string(CausalClass c) {
    switch (c) {
        case CausalClass::zero: return "zero";
        case CausalClass::future_timelike: return "future-timelike";
        case CausalClass::past_timelike: return "past-timelike";
        case CausalClass::future_null: return "future-null";
        case CausalClass::past_null: return "past-null";
        case CausalClass::spacelike: return "spacelike";
    }
    return "?";
}

// Pointwise metric data: value, inverse, first derivatives, Christoffel
// symbols and Gauss curvature (Brioschi form, which is rational in the
// coefficients and valid for indefinite metrics).
struct MetricEval {
    SymMat2 g;
    SymMat2 g_inv;
    SymMat2 dg[2];               // dg[0] = d/dx g, dg[1] = d/dy g
    double christoffel[2][2][2]; // christoffel[k][i][j] = Gamma^k_ij
    double gauss_curvature = 0.0;
};

// Orthonormal frame at a point: T future-timelike with g(T,T) = -1,
// E spacelike with g(E,E) = +1, g(T,E) = 0, det[E, T] > 0.
struct Frame {
    Vec2 T;
    Vec2 E;
};

struct SignatureReport {
    bool ok = true;
    double min_abs_det = 0.0;    // margin: min |det g| over the sample grid
    double max_g22 = 0.0;        // most positive g22 seen (must stay < 0)
    int resolution = 0;
};

class MetricSpec {
public:
    MetricSpec(FourierSeries g11, FourierSeries g12, FourierSeries g22,
               std::string family = "raw")
        : g11_(std::move(g11)), g12_(std::move(g12)), g22_(std::move(g22)),
          family_(std::move(family)) {
        build_plan();
    }

    //------------------------------------------------------------------
    // Built-in families

    static MetricSpec flat() {
        return MetricSpec(FourierSeries::constant(1.0), FourierSeries(),
                          FourierSeries::constant(-1.0), "flat");
    }

    // g = exp(2f) (dx^2 - dy^2), f = A sin(2 pi x) sin(2 pi y).
    // exp(2f) is expanded into a Fourier series through modified Bessel
    // coefficients and truncated below 1e-14 relative, far below every
    // tolerance used downstream.
    static MetricSpec conformal(double amplitude = 0.1) {
        FourierSeries e2f = exp_sinsin_series(amplitude);
        FourierSeries g22;
        for (const auto& t : e2f.terms()) g22.add_term(t.m, t.n, -t.a, -t.b);
        return MetricSpec(e2f, FourierSeries(), g22, "conformal");
    }

    // g11 = 1, g12 = A sin(2 pi x), g22 = -1.  det = -1 - g12^2 < 0 always.
    static MetricSpec sheared(double amplitude = 0.2) {
        FourierSeries g12({FourierTerm{1, 0, 0.0, amplitude}});
        return MetricSpec(FourierSeries::constant(1.0), g12,
                          FourierSeries::constant(-1.0), "sheared");
    }

    const std::string& family() const { return family_; }
    const FourierSeries& g11() const { return g11_; }
    const FourierSeries& g12() const { return g12_; }
    const FourierSeries& g22() const { return g22_; }

    //------------------------------------------------------------------
    // Evaluation

    MetricEval eval(Vec2 p) const {
        double E = c_[0], F = c_[1], G = c_[2];
        double Ex = 0, Ey = 0, Fx = 0, Fy = 0, Gx = 0, Gy = 0;
        double Eyy = 0, Fxy = 0, Gxx = 0;

        for (const Freq& q : plan_) {
            double phase = q.wx * p.x + q.wy * p.y;
            double c = std::cos(phase), s = std::sin(phase);
            // per component: value a*c + b*s, d/dphase = b*c - a*s
            double vE = q.a[0] * c + q.b[0] * s;
            double dE = q.b[0] * c - q.a[0] * s;
            double vF = q.a[1] * c + q.b[1] * s;
            double dF = q.b[1] * c - q.a[1] * s;
            double vG = q.a[2] * c + q.b[2] * s;
            double dG = q.b[2] * c - q.a[2] * s;
            E += vE; Ex += q.wx * dE; Ey += q.wy * dE;
            F += vF; Fx += q.wx * dF; Fy += q.wy * dF;
            G += vG; Gx += q.wx * dG; Gy += q.wy * dG;
            Eyy -= q.wy * q.wy * vE;
            Fxy -= q.wx * q.wy * vF;
            Gxx -= q.wx * q.wx * vG;
        }

        MetricEval out;
        out.g = {E, F, G};
        double det = E * G - F * F;
        if (!(det < 0.0) || !(G < 0.0))
            throw SignatureError("metric signature violated at (" +
                                 std::to_string(p.x) + ", " + std::to_string(p.y) +
                                 "): det=" + std::to_string(det) +
                                 " g22=" + std::to_string(G));
        out.g_inv = {G / det, -F / det, E / det};
        out.dg[0] = {Ex, Fx, Gx};
        out.dg[1] = {Ey, Fy, Gy};

        // Gamma^k_ij = 1/2 g^{kl} (d_i g_{lj} + d_j g_{li} - d_l g_{ij})
        const SymMat2* D = out.dg;
        auto dcomp = [&](int a, int i, int j) {
            const SymMat2& m = D[a];
            return i == 0 ? (j == 0 ? m.xx : m.xy) : (j == 0 ? m.xy : m.yy);
        };
        double ginv[2][2] = {{out.g_inv.xx, out.g_inv.xy},
                             {out.g_inv.xy, out.g_inv.yy}};
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = i; j < 2; ++j) {
                    double sum = 0.0;
                    for (int l = 0; l < 2; ++l)
                        sum += ginv[k][l] *
                               (dcomp(i, l, j) + dcomp(j, l, i) - dcomp(l, i, j));
                    out.christoffel[k][i][j] = 0.5 * sum;
                    out.christoffel[k][j][i] = 0.5 * sum;
                }

        // Brioschi determinant form of the Gauss curvature.
        double m1 = det3(-0.5 * Eyy + Fxy - 0.5 * Gxx, 0.5 * Ex, Fx - 0.5 * Ey,
                         Fy - 0.5 * Gx, E, F,
                         0.5 * Gy, F, G);
        double m2 = det3(0.0, 0.5 * Ey, 0.5 * Gx,
                         0.5 * Ey, E, F,
                         0.5 * Gx, F, G);
        out.gauss_curvature = (m1 - m2) / (det * det);
        return out;
    }

    double lorentz_norm(Vec2 p, Vec2 v) const { return eval(p).g.quad(v); }
    double inner(Vec2 p, Vec2 u, Vec2 v) const { return eval(p).g.bilin(u, v); }

    // Tolerance band 1e-10 (scaled by |v|^2) around the null cone.
    CausalClass classify(Vec2 p, Vec2 v) const { return classify_from(eval(p), v); }

    static CausalClass classify_from(const MetricEval& me, Vec2 v) {
        if (v.x == 0.0 && v.y == 0.0) return CausalClass::zero;
        double q = me.g.quad(v);
        double band = 1e-10 * std::max(1.0, v.norm2());
        bool future = me.g.bilin(v, Vec2{0.0, 1.0}) < 0.0;
        if (std::abs(q) <= band)
            return future ? CausalClass::future_null : CausalClass::past_null;
        if (q < 0.0)
            return future ? CausalClass::future_timelike : CausalClass::past_timelike;
        return CausalClass::spacelike;
    }

    // T = (0,1)/sqrt(-g22); E = Gram-Schmidt of (1,0) against T.  E.x > 0, so
    // {E, T} is positively oriented.
    Frame future_frame(Vec2 p) const { return frame_from(eval(p)); }

    static Frame frame_from(const MetricEval& me) {
        double s = std::sqrt(-me.g.yy);
        Vec2 T{0.0, 1.0 / s};
        Vec2 ex{1.0, 0.0};
        Vec2 Ep = ex + me.g.bilin(ex, T) * T; // remove T-component (g(T,T) = -1)
        double en = std::sqrt(me.g.quad(Ep));
        return {T, Ep / en};
    }

    // Future null directions, Euclidean-normalized.  first = minus family
    // (flat: (1,1)/sqrt2), second = plus family (flat: (-1,1)/sqrt2);
    // {minus, plus} is positively oriented.
    std::array<Vec2, 2> null_directions(Vec2 p) const {
        return null_directions_from(eval(p));
    }

    static std::array<Vec2, 2> null_directions_from(const MetricEval& me) {
        Frame f = frame_from(me);
        return {normalized(f.T + f.E), normalized(f.T - f.E)};
    }

    // Samples an n x n grid over one fundamental domain; throws
    // SignatureError naming the first violating point.
    SignatureReport signature_check(int resolution = 64) const {
        require(resolution >= 2, "signature_check: resolution >= 2");
        SignatureReport rep;
        rep.resolution = resolution;
        rep.min_abs_det = std::numeric_limits<double>::infinity();
        rep.max_g22 = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < resolution; ++j)
            for (int i = 0; i < resolution; ++i) {
                Vec2 p{double(i) / resolution, double(j) / resolution};
                MetricEval me = eval(p); // throws on violation
                rep.min_abs_det = std::min(rep.min_abs_det, std::abs(me.g.det()));
                rep.max_g22 = std::max(rep.max_g22, me.g.yy);
            }
        return rep;
    }

private:
    struct Freq {
        double wx, wy;          // 2*pi*m, 2*pi*n
        double a[3], b[3];      // cos/sin coefficients for g11, g12, g22
    };

    static double det3(double a, double b, double c,
                       double d, double e, double f,
                       double g, double h, double i) {
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    }

    void build_plan() {
        c_[0] = c_[1] = c_[2] = 0.0;
        std::map<std::pair<int, int>, Freq> acc;
        const FourierSeries* comp[3] = {&g11_, &g12_, &g22_};
        for (int ci = 0; ci < 3; ++ci)
            for (const auto& t : comp[ci]->terms()) {
                if (t.m == 0 && t.n == 0) {
                    c_[ci] += t.a; // sin(0) = 0, the b part drops
                    continue;
                }
                Freq& q = acc[{t.m, t.n}];
                q.wx = two_pi * t.m;
                q.wy = two_pi * t.n;
                q.a[ci] += t.a;
                q.b[ci] += t.b;
            }
        plan_.clear();
        plan_.reserve(acc.size());
        for (auto& [k, q] : acc) plan_.push_back(q);
    }

    // Fourier expansion of exp(2 A sin(2 pi x) sin(2 pi y)) via the
    // Jacobi-Anger identity: with t_pm = 2 pi (x -+ y),
    //   2 A sin sin = A cos(t_minus) - A cos(t_plus)
    //   exp(z cos t) = I_0(z) + 2 sum_l I_l(z) cos(l t).
    static FourierSeries exp_sinsin_series(double A) {
        const int order = 14;
        std::array<double, order + 1> bess;
        for (int l = 0; l <= order; ++l) bess[l] = bessel_i(l, std::abs(A));
        std::vector<FourierTerm> terms;
        for (int l = 0; l <= order; ++l)
            for (int j = 0; j + l <= order; ++j) {
                double cl = (l == 0 ? 1.0 : 2.0) * bess[l];
                if (A < 0.0 && (l & 1)) cl = -cl;
                double dj = (j == 0 ? 1.0 : 2.0) * bess[j] * ((j & 1) ? -1.0 : 1.0);
                if (A < 0.0 && (j & 1)) dj = -dj;
                double w = 0.5 * cl * dj;
                if (std::abs(w) < 1e-16) continue;
                // cos(l t-) cos(j t+) splits into two frequencies, which
                // coincide when l = j = 0 (both pushes then merge into the
                // full constant weight cl*dj).
                terms.push_back({l + j, j - l, w, 0.0});
                terms.push_back({l - j, -(l + j), w, 0.0});
            }
        FourierSeries s(std::move(terms));
        s.prune(1e-14 * s.max_abs_coeff());
        return s;
    }

    // Modified Bessel function of the first kind, small-argument power series.
    static double bessel_i(int n, double z) {
        double half = 0.5 * z;
        double term = 1.0;
        for (int k = 1; k <= n; ++k) term *= half / k; // (z/2)^n / n!
        double sum = term;
        double z2 = half * half;
        for (int s = 1; s < 40; ++s) {
            term *= z2 / (s * (s + n));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    }

    FourierSeries g11_, g12_, g22_;
    std::string family_;
    double c_[3];
    std::vector<Freq> plan_;
};

// Anything that can be evaluated pointwise works with the integrators; the
// Fourier-backed MetricSpec is the production model, test code adds analytic
// ones (constant-curvature references).
template <class M>
concept MetricModel = requires(const M& m, Vec2 p) {
    { m.eval(p) } -> std::same_as<MetricEval>;
};

// Generic counterparts of the MetricSpec conveniences, usable with any model.
template <MetricModel M>
Frame future_frame_at(const M& m, Vec2 p) {
    return MetricSpec::frame_from(m.eval(p));
}

template <MetricModel M>
std::array<Vec2, 2> null_directions_at(const M& m, Vec2 p) {
    return MetricSpec::null_directions_from(m.eval(p));
}

template <MetricModel M>
CausalClass classify_at(const M& m, Vec2 p, Vec2 v) {
    return MetricSpec::classify_from(m.eval(p), v);
}

// Euclidean-normalizes v to g(v,v) = -1; requires v timelike.
template <MetricModel M>
Vec2 unit_timelike(const M& m, Vec2 p, Vec2 v) {
    double q = m.eval(p).g.quad(v);
    require(q < 0.0, "unit_timelike: vector is not timelike");
    return v / std::sqrt(-q);
}

} // namespace teik

#endif
