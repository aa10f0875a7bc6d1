// teik - horofunction limits of shifted distance fields: the C^1,1 eikonal
// solution with prescribed asymptotic direction, its gradient foliation, and
// the associated verification instruments (periodicity, calibration,
// curvature probes, two-route rational comparison).
#ifndef TEIK_BUSEMANN_HPP
#define TEIK_BUSEMANN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "causal.hpp"
#include "core.hpp"
#include "geodesic.hpp"
#include "lines.hpp"
#include "maxdist.hpp"
#include "metric.hpp"

namespace teik {

inline Vec2 rotate(Vec2 v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

//----------------------------------------------------------------------------
// Angular domains bounded by two periodic lines through a pole.

struct AngularDomain {
    Vec2 pole;
    PeriodicLine line_minus; // clockwise-most boundary
    PeriodicLine line_plus;  // counterclockwise-most boundary
    bool future = true;
    int extent_periods = 64; // deck-translation certification range
};

template <MetricModel M>
AngularDomain make_angular_domain(const M& metric, Vec2 p,
                                  std::array<int, 2> k_minus,
                                  std::array<int, 2> k_plus, bool future = true,
                                  const LineOptions& opt = {}) {
    AngularDomain dom;
    dom.pole = p;
    dom.future = future;
    dom.line_minus = find_periodic_line(metric, p, k_minus, opt);
    dom.line_plus = find_periodic_line(metric, p, k_plus, opt);
    require(cross(dom.line_minus.direction(), dom.line_plus.direction()) > 0.0,
            "make_angular_domain: boundary directions must be ordered");
    return dom;
}

namespace detail {

// signed side of x relative to the full periodic line (positive = left of the
// future-directed line), using exact deck periodicity to reduce x near the
// computed arc
inline double line_side(const PeriodicLine& line, Vec2 x, int extent_periods) {
    Vec2 kv{double(line.deck[0]), double(line.deck[1])};
    double k2 = kv.norm2();
    double n_real = dot(x - line.base, kv) / k2;
    double n = std::floor(n_real);
    if (std::abs(n_real) > double(extent_periods))
        throw OutOfChart("domain_membership: point beyond boundary line extent");
    Vec2 xr = x - n * kv;
    const auto& s = line.geodesic.samples;
    size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.size(); ++i) {
        double d2 = (s[i].p - xr).norm2();
        if (d2 < bd) { bd = d2; best = i; }
    }
    return cross(s[best].v, xr - s[best].p);
}

} // namespace detail

// True iff x lies strictly between the boundary lines and is chronologically
// related to the pole on the domain's side.
template <MetricModel M>
bool domain_membership(const M& metric, const AngularDomain& dom, Vec2 x,
                       const DistanceOptions& opt = {}) {
    if ((x - dom.pole).norm() < 1e-12) return false; // open domain
    double side_minus = detail::line_side(dom.line_minus, x, dom.extent_periods);
    double side_plus = detail::line_side(dom.line_plus, x, dom.extent_periods);
    if (!(side_minus > 0.0 && side_plus < 0.0)) {
        if (dom.future) return false;
        // past domain: the sector is reflected through the pole
        if (!(side_minus < 0.0 && side_plus > 0.0)) return false;
    } else if (!dom.future) {
        return false;
    }
    return dom.future ? reachable(metric, dom.pole, x, opt)
                      : reachable(metric, x, dom.pole, opt);
}

//----------------------------------------------------------------------------
// Pole sequences receding along a timelike ray.

struct PoleSequence {
    std::vector<Vec2> poles;                   // p_i = p + k_i
    std::vector<std::array<int, 2>> deck_shifts;
    std::vector<double> times;                 // t_i along the ray
    Vec2 direction;                            // asymptotic direction alpha
    Vec2 base;
    double spacing = 5.0;
    double Q = 0.0;                            // max chord deviation from alpha
};

struct PoleOptions {
    double spacing = 5.0;
    bool validate = true;        // pairwise separation check
    double validate_step = 0.05;
    double min_separation = 1.0;
    const ConeEstimate* cone = nullptr;
};

// Consecutive-pair separation check: each pole must be a timelike unit
// distance into the past of its predecessor.
template <MetricModel M>
void validate_pole_sequence(const M& metric, const PoleSequence& seq,
                            const PoleOptions& opt = {}) {
    auto check_pair = [&](Vec2 past_pt, Vec2 future_pt, int i) {
        DistanceOptions dop;
        dop.step = opt.validate_step;
        dop.cone = opt.cone;
        detail::ChordBoost cb =
            detail::boost_of_chord(metric.eval(past_pt), future_pt - past_pt);
        if (cb.inside) dop.hint = cb.chi;
        DistanceResult dr;
        try {
            dr = lorentz_distance(metric, past_pt, future_pt, dop);
        } catch (const NumericalError&) {
            dr.status = CausalStatus::not_causally_related;
        }
        if (dr.status != CausalStatus::timelike || dr.value < opt.min_separation)
            throw ConditionStarViolation(
                "pole sequence: pair (" + std::to_string(i) + ", " +
                std::to_string(i + 1) + ") has d = " +
                (dr.status == CausalStatus::timelike ? std::to_string(dr.value)
                                                     : std::string("none")) +
                ", required >= " + std::to_string(opt.min_separation));
    };
    check_pair(seq.poles.front(), seq.base, 0);
    for (size_t i = 0; i + 1 < seq.poles.size(); ++i)
        check_pair(seq.poles[i + 1], seq.poles[i], int(i) + 1);
}

// Places poles p_i = p + k_i along the past of the ray: t_i = spacing * i,
// k_i = -(nearest lattice vector to gamma(t_i) - gamma(0)).  The lattice
// rounding keeps every pole within the covering radius of the ray, so chords
// between poles deviate from alpha by a bounded amount Q.
template <MetricModel M>
PoleSequence build_pole_sequence(const M& metric, Vec2 p, Vec2 alpha, int n,
                                 const Geodesic& ray,
                                 const PoleOptions& opt = {}) {
    require(n >= 3, "build_pole_sequence: n >= 3");
    alpha = normalized(alpha);
    require(ray.t_end() >= opt.spacing * n - 1e-9,
            "build_pole_sequence: ray shorter than spacing * n");
    require((ray.samples.front().p - p).norm() < 1e-9,
            "build_pole_sequence: ray must start at p");

    PoleSequence seq;
    seq.base = p;
    seq.direction = alpha;
    seq.spacing = opt.spacing;
    for (int i = 1; i <= n; ++i) {
        double t = opt.spacing * i;
        Vec2 disp = ray.at(t).p - p;
        std::array<int, 2> k{-int(std::lround(disp.x)), -int(std::lround(disp.y))};
        seq.deck_shifts.push_back(k);
        seq.poles.push_back(p + Vec2{double(k[0]), double(k[1])});
        seq.times.push_back(t);
    }

    // chord deviation over consecutive and dyadically spaced pairs
    double Q = 0.0;
    for (size_t gap = 1; gap < seq.poles.size(); gap *= 2)
        for (size_t i = 0; i + gap < seq.poles.size(); i += gap) {
            Vec2 chord = seq.poles[i] - seq.poles[i + gap]; // future-pointing
            Q = std::max(Q, dist_to_ray(chord, alpha));
        }
    for (size_t i = 0; i < seq.poles.size(); ++i)
        Q = std::max(Q, dist_to_ray(p - seq.poles[i], alpha));
    seq.Q = Q;

    if (opt.validate) validate_pole_sequence(metric, seq, opt);
    return seq;
}

//----------------------------------------------------------------------------
// The horofunction limit u = lim (t_i - d(p_i, .)).

struct ConvergenceEntry {
    int index = 0;          // pole index i (1-based)
    double time = 0.0;      // t_i
    double value_gap = 0.0; // sup |u_i - u_prev| over the joint valid mask
    double gradient_gap = 0.0;
    double center_drift = 0.0; // raw |u_i(x0) - u_prev(x0)| before anchoring
};

struct BusemannField : ScalarField {
    Vec2 direction;
    std::vector<ConvergenceEntry> history;
    int iterations_used = 0;
    bool anchored = false;
    Vec2 anchor_point;
    double tol = 0.0;
};

struct BusemannOptions {
    double gap_safety = 0.4; // internal stop threshold = tol * gap_safety
    int ladder_ratio = 2;    // geometric pole-index ratio between iterates
    double anchor_trigger = 10.0; // anchor when raw center drift > trigger*tol
    bool force_anchor = false;
    double epsilon_margin = 0.05;
    FieldOptions field;      // per-iterate distance field options
};

namespace detail {

// one ladder iterate: u_i = t_i - d(p_i, .) as a ScalarField (gradient and
// arrival velocity oriented for u, not d)
template <MetricModel M>
ScalarField busemann_iterate(const M& metric, Vec2 pole, double t, Rect window,
                             int nx, int ny, const BusemannOptions& opt) {
    ScalarField f = distance_field(metric, pole, window, nx, ny,
                                   opt.epsilon_margin, opt.field);
    for (size_t id = 0; id < f.values.size(); ++id) {
        if (!f.valid[id]) continue;
        f.values[id] = t - f.values[id];
        f.gradient[id] = -1.0 * f.gradient[id];
        // arrival velocity is already the future unit gradient of t - d
    }
    return f;
}

inline size_t center_node(const ScalarField& f) {
    int cx = (f.nx - 1) / 2, cy = (f.ny - 1) / 2;
    if (f.is_valid(cx, cy)) return f.index(cx, cy);
    // nearest valid node to the center
    double bd = std::numeric_limits<double>::infinity();
    size_t best = size_t(-1);
    for (int iy = 0; iy < f.ny; ++iy)
        for (int ix = 0; ix < f.nx; ++ix)
            if (f.is_valid(ix, iy)) {
                double d2 = (f.node(ix, iy) - f.node(cx, cy)).norm2();
                if (d2 < bd) { bd = d2; best = f.index(ix, iy); }
            }
    if (best == size_t(-1))
        throw EmptyWindow("busemann_field: no valid node for anchoring");
    return best;
}

} // namespace detail

// Evaluates the ladder u_i at geometrically spaced pole indices until both
// the value and gradient sup gaps between successive iterates fall below
// tol * gap_safety on the joint valid mask.  Raw values are kept unless the
// center value drifts (lattice-rounding jitter for generic directions), in
// which case every subsequent iterate is anchored by subtracting its center
// value and the flag is recorded.
template <MetricModel M>
BusemannField busemann_field(const M& metric, const PoleSequence& seq,
                             Rect window, int nx, int ny, double tol,
                             const BusemannOptions& opt_in = {}) {
    require(tol > 0.0, "busemann_field: tol > 0");
    require(!seq.poles.empty(), "busemann_field: empty pole sequence");

    BusemannOptions opt = opt_in;
    ConeEstimate cone_local;
    if (!opt.field.cone) {
        cone_local = estimate_cone(metric, opt.field.cone_length,
                                   opt.field.cone_step);
        opt.field.cone = &cone_local;
    }

    // geometric rung schedule (1-based pole indices), always ending at n
    std::vector<int> rungs;
    int n = int(seq.poles.size());
    for (int i = 1; i <= n; i = std::max(i + 1, i * opt.ladder_ratio))
        rungs.push_back(i);
    if (rungs.back() != n) rungs.push_back(n);

    double threshold = tol * opt.gap_safety;

    BusemannField out;
    out.direction = seq.direction;
    out.tol = tol;
    out.anchored = opt.force_anchor;

    ScalarField prev;
    double prev_center_raw = 0.0;
    size_t anchor_id = size_t(-1);
    bool have_prev = false;
    int increases = 0;

    for (size_t r = 0; r < rungs.size(); ++r) {
        int i = rungs[r];
        ScalarField cur = detail::busemann_iterate(
            metric, seq.poles[i - 1], seq.times[i - 1], window, nx, ny, opt);
        if (anchor_id == size_t(-1)) {
            anchor_id = detail::center_node(cur);
            out.anchor_point = cur.node(int(anchor_id % cur.nx),
                                        int(anchor_id / cur.nx));
        }
        if (!cur.valid[anchor_id])
            throw NoConvergence("busemann_field: anchor node left the valid mask");
        double center_raw = cur.values[anchor_id];

        if (!have_prev) {
            prev = std::move(cur);
            prev_center_raw = center_raw;
            have_prev = true;
            continue;
        }

        double drift = std::abs(center_raw - prev_center_raw);
        if (!out.anchored && drift > opt.anchor_trigger * tol) out.anchored = true;

        double off_cur = out.anchored ? center_raw : 0.0;
        double off_prev = out.anchored ? prev.values[anchor_id] : 0.0;

        double vgap = 0.0, ggap = 0.0;
        size_t joint = 0;
        for (size_t id = 0; id < cur.values.size(); ++id) {
            if (!cur.valid[id] || !prev.valid[id]) continue;
            ++joint;
            vgap = std::max(vgap, std::abs((cur.values[id] - off_cur) -
                                           (prev.values[id] - off_prev)));
            ggap = std::max(ggap, (cur.gradient[id] - prev.gradient[id]).norm());
        }
        if (joint == 0) {
            vgap = std::numeric_limits<double>::infinity();
            ggap = vgap;
        }

        out.history.push_back({i, seq.times[i - 1], vgap, ggap, drift});
        out.iterations_used = int(r) + 1;

        bool converged = vgap < threshold && ggap < threshold;
        if (converged) {
            static_cast<ScalarField&>(out) = std::move(cur);
            if (out.anchored) {
                double off = out.values[anchor_id];
                for (size_t id = 0; id < out.values.size(); ++id)
                    if (out.valid[id]) out.values[id] -= off;
            }
            return out;
        }

        if (out.history.size() >= 2) {
            const auto& h = out.history;
            if (h[h.size() - 1].value_gap > h[h.size() - 2].value_gap)
                ++increases;
            else
                increases = 0;
            if (increases >= 2)
                throw NoConvergence(
                    "busemann_field: sup gaps increasing (last " +
                    std::to_string(h.back().value_gap) + ")");
        }

        prev = std::move(cur);
        prev_center_raw = center_raw;
    }
    std::string gaps = out.history.empty()
                           ? std::string("none")
                           : "value " + std::to_string(out.history.back().value_gap) +
                                 ", gradient " +
                                 std::to_string(out.history.back().gradient_gap);
    throw NoConvergence("busemann_field: pole sequence exhausted with gaps (" +
                        gaps + ") above " + std::to_string(threshold));
}

//----------------------------------------------------------------------------
// Lattice periodicity of the gradient.

struct PeriodicityReport {
    double defect = std::numeric_limits<double>::quiet_NaN(); // sup over shifts
    double defect_x = std::numeric_limits<double>::quiet_NaN();
    double defect_y = std::numeric_limits<double>::quiet_NaN();
    // the value field is periodic only up to one linear form: report the
    // spread (sup - inf) of u(x + e) - u(x), which gauges out the constant
    double value_spread_x = std::numeric_limits<double>::quiet_NaN();
    double value_spread_y = std::numeric_limits<double>::quiet_NaN();
    int pairs_x = 0, pairs_y = 0;
};

template <MetricModel M>
PeriodicityReport check_periodicity(const BusemannField& field, const M&) {
    PeriodicityReport rep;
    double hx = field.dx(), hy = field.dy();

    auto axis = [&](int sx, int sy, double& defect, double& spread, int& pairs) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        double g = 0.0;
        int cnt = 0;
        for (int iy = 0; iy + sy < field.ny; ++iy)
            for (int ix = 0; ix + sx < field.nx; ++ix) {
                size_t a = field.index(ix, iy);
                size_t b = field.index(ix + sx, iy + sy);
                if (!field.valid[a] || !field.valid[b]) continue;
                if (field.one_sided[a] || field.one_sided[b]) continue;
                ++cnt;
                g = std::max(g, (field.gradient[b] - field.gradient[a]).norm());
                double dv = field.values[b] - field.values[a];
                lo = std::min(lo, dv);
                hi = std::max(hi, dv);
            }
        if (cnt > 0) {
            defect = g;
            spread = hi - lo;
            pairs = cnt;
        }
    };

    int sx = int(std::lround(1.0 / hx));
    if (sx >= 1 && std::abs(sx * hx - 1.0) < 1e-9 && sx <= field.nx - 1)
        axis(sx, 0, rep.defect_x, rep.value_spread_x, rep.pairs_x);
    int sy = int(std::lround(1.0 / hy));
    if (sy >= 1 && std::abs(sy * hy - 1.0) < 1e-9 && sy <= field.ny - 1)
        axis(0, sy, rep.defect_y, rep.value_spread_y, rep.pairs_y);

    if (rep.pairs_x == 0 && rep.pairs_y == 0)
        throw WindowTooSmall(
            "check_periodicity: window spans less than one lattice period "
            "on both axes (or nodes are not shift-aligned)");
    rep.defect = 0.0;
    if (rep.pairs_x) rep.defect = std::max(rep.defect, rep.defect_x);
    if (rep.pairs_y) rep.defect = std::max(rep.defect, rep.defect_y);
    return rep;
}

//----------------------------------------------------------------------------
// Gradient foliation: integral curves of the unit timelike gradient field.

struct Leaf {
    std::vector<GeodesicSample> samples; // positions in the universal cover
    Vec2 seed;
    bool left_window = false;            // truncated at the valid-mask edge
    double geodesic_deviation = 0.0;     // vs the true geodesic, common span
    std::optional<DirectionEstimate> direction;
    double euclid_length = 0.0;
};

struct FoliationChart {
    std::vector<Leaf> leaves;
    std::vector<Vec2> seeds;
    Rect window;
    double min_separation = std::numeric_limits<double>::infinity();
    double max_geodesic_deviation = 0.0;
    bool any_left_window = false;
};

struct LeafOptions {
    double step = 0.01;
    bool use_arrival = true; // analytic unit gradient instead of the FD grid
    bool wrap = true;        // reduce lookups by deck translations
    double geodesic_step = 5e-3;
};

namespace detail {

// lookup position reduced into the field window by integer translations
inline bool wrapped_lookup(const ScalarField& f, Vec2 x, bool wrap, Vec2& red) {
    if (f.covers(x)) { red = x; return true; }
    if (!wrap) return false;
    double cx = 0.5 * (f.window.x0 + f.window.x1);
    double cy = 0.5 * (f.window.y0 + f.window.y1);
    int bx = int(std::floor(x.x - cx + 0.5));
    int by = int(std::floor(x.y - cy + 0.5));
    for (int jy = -1; jy <= 1; ++jy)
        for (int jx = -1; jx <= 1; ++jx) {
            Vec2 cand = x - Vec2{double(bx + jx), double(by + jy)};
            if (f.covers(cand)) { red = cand; return true; }
        }
    return false;
}

} // namespace detail

// Integrates x' = grad u with RK4 on the interpolated gradient grid; each
// leaf is cross-checked against the true geodesic launched from the same
// initial data.  Lookups wrap by deck translations (the gradient is lattice
// periodic), so leaves run to the horizon even on a one-period window;
// positions are reported in the universal cover.
template <MetricModel M>
FoliationChart integral_curves(const BusemannField& field, const M& metric,
                               const std::vector<Vec2>& seeds, double horizon,
                               const LeafOptions& opt = {}) {
    FoliationChart chart;
    chart.seeds = seeds;
    chart.window = field.window;
    bool arrival = opt.use_arrival && !field.arrival_velocity.empty();

    auto grad_at = [&](Vec2 x, Vec2& g) {
        Vec2 red;
        if (!detail::wrapped_lookup(field, x, opt.wrap, red)) return false;
        g = arrival ? field.velocity_at(red) : field.gradient_at(red);
        return true;
    };

    for (Vec2 seed : seeds) {
        Vec2 red;
        require(detail::wrapped_lookup(field, seed, opt.wrap, red),
                "integral_curves: seed outside the valid mask");
        Leaf leaf;
        leaf.seed = seed;
        Vec2 x = seed;
        double t = 0.0;
        Vec2 g0;
        grad_at(x, g0);
        leaf.samples.push_back({0.0, x, g0});
        while (t < horizon) {
            double h = std::min(opt.step, horizon - t);
            Vec2 k1, k2, k3, k4;
            if (!grad_at(x, k1) || !grad_at(x + 0.5 * h * k1, k2) ||
                !grad_at(x + 0.5 * h * k2, k3) || !grad_at(x + h * k3, k4)) {
                leaf.left_window = true;
                break;
            }
            Vec2 xn = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            Vec2 gn;
            if (!grad_at(xn, gn)) { leaf.left_window = true; break; }
            leaf.euclid_length += (xn - x).norm();
            x = xn;
            t += h;
            leaf.samples.push_back({t, x, gn});
        }

        // geodesic cross-check from the same initial data
        if (leaf.samples.size() >= 2) {
            Vec2 v0 = unit_timelike(metric, seed, leaf.samples.front().v);
            IntegrateOptions io;
            io.step = opt.geodesic_step;
            io.drift_tol = 1e-4;
            Geodesic geo = integrate_geodesic(metric, seed, v0,
                                              leaf.samples.back().t, io);
            double dev = 0.0;
            for (const auto& s : leaf.samples) {
                if (s.t > geo.t_end() + 1e-12) break;
                dev = std::max(dev, (s.p - geo.at(s.t).p).norm());
            }
            leaf.geodesic_deviation = dev;
            chart.max_geodesic_deviation =
                std::max(chart.max_geodesic_deviation, dev);
        }
        if (leaf.euclid_length >= 10.0)
            leaf.direction = asymptotic_direction(leaf.samples, leaf.euclid_length);
        chart.any_left_window |= leaf.left_window;
        chart.leaves.push_back(std::move(leaf));
    }

    // pairwise minimum separation at matched parameters, on the torus
    auto torus_dist = [](Vec2 a, Vec2 b) {
        double dx = a.x - b.x, dy = a.y - b.y;
        dx -= std::round(dx);
        dy -= std::round(dy);
        return std::hypot(dx, dy);
    };
    for (size_t i = 0; i < chart.leaves.size(); ++i)
        for (size_t j = i + 1; j < chart.leaves.size(); ++j) {
            const auto& A = chart.leaves[i].samples;
            const auto& B = chart.leaves[j].samples;
            size_t m = std::min(A.size(), B.size());
            for (size_t s = 0; s < m; ++s)
                chart.min_separation =
                    std::min(chart.min_separation, torus_dist(A[s].p, B[s].p));
        }
    return chart;
}

//----------------------------------------------------------------------------
// Calibration: u drops by exactly the proper time along its integral curves
// and by at least the proper time along every other timelike curve.

struct CalibrationReport {
    double drop = 0.0;     // u(start) - u(end): u decreases toward the future
    double length = 0.0;   // g-length of the curve
    double residual = 0.0; // |drop - length|
    double slack = 0.0;    // drop - length (>= 0 up to numerics)
};

namespace detail {

template <MetricModel M>
double polyline_g_length_impl(const M& metric, const std::vector<Vec2>& pts) {
    double L = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        Vec2 mid = 0.5 * (pts[i] + pts[i + 1]);
        double q = metric.eval(mid).g.quad(pts[i + 1] - pts[i]);
        require(q < 0.0, "calibration_check: curve segment not timelike");
        L += std::sqrt(-q);
    }
    return L;
}

} // namespace detail

template <MetricModel M>
CalibrationReport calibration_check(const BusemannField& field, const M& metric,
                                    const std::vector<Vec2>& curve) {
    require(curve.size() >= 2, "calibration_check: need >= 2 points");
    CalibrationReport rep;
    rep.length = detail::polyline_g_length_impl(metric, curve);
    rep.drop = field.value_at(curve.front()) - field.value_at(curve.back());
    rep.residual = std::abs(rep.drop - rep.length);
    rep.slack = rep.drop - rep.length;
    return rep;
}

template <MetricModel M>
CalibrationReport calibration_check(const BusemannField& field, const M& metric,
                                    const Leaf& leaf) {
    // longest prefix inside one chart: the value drop across a deck wrap
    // would need the lattice linear form of u added back
    std::vector<Vec2> pts;
    pts.reserve(leaf.samples.size());
    for (const auto& s : leaf.samples) {
        if (!field.covers(s.p)) break;
        pts.push_back(s.p);
    }
    require(pts.size() >= 2, "calibration_check: leaf leaves the window immediately");
    return calibration_check(field, metric, pts);
}

//----------------------------------------------------------------------------
// Second-difference curvature probe of a field.

inline SymMat2 hessian_probe(const ScalarField& field, Vec2 point) {
    int ix = int(std::lround((point.x - field.window.x0) / field.dx()));
    int iy = int(std::lround((point.y - field.window.y0) / field.dy()));
    if (ix < 2 || iy < 2 || ix > field.nx - 3 || iy > field.ny - 3)
        throw MaskMargin("hessian_probe: needs a 2-node margin inside the window");
    for (int jy = -2; jy <= 2; ++jy)
        for (int jx = -2; jx <= 2; ++jx)
            if (!field.is_valid(ix + jx, iy + jy))
                throw MaskMargin("hessian_probe: invalid node within the stencil");
    auto u = [&](int jx, int jy) {
        return field.values[field.index(ix + jx, iy + jy)];
    };
    double hx = field.dx(), hy = field.dy();
    SymMat2 H;
    H.xx = (u(1, 0) - 2.0 * u(0, 0) + u(-1, 0)) / (hx * hx);
    H.yy = (u(0, 1) - 2.0 * u(0, 0) + u(0, -1)) / (hy * hy);
    H.xy = (u(1, 1) - u(1, -1) - u(-1, 1) + u(-1, -1)) / (4.0 * hx * hy);
    return H;
}

//----------------------------------------------------------------------------
// Rational directions: direct construction vs the generic-direction limit.

struct RouteReport {
    BusemannField direct;            // along the periodic-line ray
    BusemannField limit;             // extrapolated from generic directions
    std::vector<double> deltas;      // rotation angles of the generic rays
    std::vector<double> limit_gaps;  // sup gaps between successive tilted fields
    double route_value_gap = 0.0;    // direct vs limit, after common anchoring
    double route_gradient_gap = 0.0;
};

struct RationalOptions {
    int n_poles = 512;
    PoleOptions pole;
    BusemannOptions busemann;
    RayOptions ray;
    double delta0 = 0.02;      // largest rotation angle
    double delta_ratio = 4.0;  // successive angle shrink factor
    double chord_horizon = 2000.0; // long-chord construction of tilted rays
    double ray_step = 0.05;
};

// Two independent constructions of u for a primitive lattice direction k:
// (a) poles along the periodic line through p; (b) quadratic extrapolation
// to zero tilt of three fields with nearby generic directions, all anchored
// at the window center.  Their gap certifies the rational-direction limit.
template <MetricModel M>
RouteReport rational_direction_field(const M& metric, Vec2 p,
                                     std::array<int, 2> k, Rect window, int nx,
                                     int ny, double tol,
                                     const RationalOptions& opt_in = {}) {
    RationalOptions opt = opt_in;
    ConeEstimate cone_local;
    if (!opt.busemann.field.cone) {
        cone_local = estimate_cone(metric, opt.busemann.field.cone_length,
                                   opt.busemann.field.cone_step);
        opt.busemann.field.cone = &cone_local;
        opt.pole.cone = &cone_local;
        opt.ray.cone = &cone_local;
    }
    Vec2 alpha = normalized(Vec2{double(k[0]), double(k[1])});
    double horizon = opt.pole.spacing * opt.n_poles + 1.0;

    // route (a): the periodic-line ray
    RayOptions ro = opt.ray;
    ro.step = opt.ray_step;
    Ray ray_a = ray_toward(metric, p, alpha, horizon, ro);
    PoleSequence seq_a = build_pole_sequence(metric, p, alpha, opt.n_poles,
                                             ray_a.geodesic, opt.pole);
    BusemannOptions ba = opt.busemann;
    ba.force_anchor = true;
    RouteReport rep;
    rep.direct = busemann_field(metric, seq_a, window, nx, ny, tol, ba);

    // route (b): three tilted generic directions, extrapolated to zero tilt
    std::vector<BusemannField> tilted;
    double delta = opt.delta0;
    for (int j = 0; j < 3; ++j, delta /= opt.delta_ratio) {
        Vec2 ad = rotate(alpha, delta);
        Geodesic ray_b = detail::chord_ray(metric, p, ad, opt.chord_horizon,
                                           horizon, opt.ray_step);
        PoleSequence seq_b = build_pole_sequence(metric, p, ad, opt.n_poles,
                                                 ray_b, opt.pole);
        tilted.push_back(busemann_field(metric, seq_b, window, nx, ny, tol, ba));
        rep.deltas.push_back(delta);
    }
    for (int j = 0; j + 1 < 3; ++j) {
        double g = 0.0;
        for (size_t id = 0; id < tilted[j].values.size(); ++id)
            if (tilted[j].valid[id] && tilted[j + 1].valid[id])
                g = std::max(g, std::abs(tilted[j].values[id] -
                                         tilted[j + 1].values[id]));
        rep.limit_gaps.push_back(g);
    }

    // nodewise quadratic extrapolation to delta = 0
    double w[3];
    for (int j = 0; j < 3; ++j) {
        w[j] = 1.0;
        for (int i = 0; i < 3; ++i)
            if (i != j)
                w[j] *= (0.0 - rep.deltas[i]) / (rep.deltas[j] - rep.deltas[i]);
    }
    BusemannField lim = tilted[2];
    lim.direction = alpha;
    for (size_t id = 0; id < lim.values.size(); ++id) {
        if (!(tilted[0].valid[id] && tilted[1].valid[id] && tilted[2].valid[id])) {
            lim.valid[id] = 0;
            continue;
        }
        lim.values[id] = w[0] * tilted[0].values[id] +
                         w[1] * tilted[1].values[id] +
                         w[2] * tilted[2].values[id];
        lim.gradient[id] = w[0] * tilted[0].gradient[id] +
                           w[1] * tilted[1].gradient[id] +
                           w[2] * tilted[2].gradient[id];
        if (!lim.arrival_velocity.empty()) {
            Vec2 v = w[0] * tilted[0].arrival_velocity[id] +
                     w[1] * tilted[1].arrival_velocity[id] +
                     w[2] * tilted[2].arrival_velocity[id];
            double q = metric.eval(lim.node(int(id % lim.nx), int(id / lim.nx)))
                           .g.quad(v);
            lim.arrival_velocity[id] = q < 0.0 ? v / std::sqrt(-q) : v;
        }
    }
    rep.limit = std::move(lim);

    // compare the routes after re-anchoring both at the same node
    size_t a0 = detail::center_node(rep.direct);
    double ca = rep.direct.values[a0];
    double cb = rep.limit.valid[a0]
                    ? rep.limit.values[a0]
                    : std::numeric_limits<double>::quiet_NaN();
    require(!std::isnan(cb), "rational_direction_field: anchor not shared");
    for (size_t id = 0; id < rep.direct.values.size(); ++id) {
        if (!rep.direct.valid[id] || !rep.limit.valid[id]) continue;
        rep.route_value_gap =
            std::max(rep.route_value_gap,
                     std::abs((rep.direct.values[id] - ca) -
                              (rep.limit.values[id] - cb)));
        rep.route_gradient_gap =
            std::max(rep.route_gradient_gap,
                     (rep.direct.gradient[id] - rep.limit.gradient[id]).norm());
    }
    return rep;
}

} // namespace teik

#endif
