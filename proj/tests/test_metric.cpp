#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support/warped_metric.hpp"
#include "teik/metric.hpp"

using namespace teik;
using Catch::Approx;

namespace {

// direct trigonometric summation, independent of the evaluation plan
double direct_eval(const FourierSeries& s, Vec2 p) {
    double acc = 0.0;
    for (const auto& t : s.terms()) {
        double ph = 2.0 * M_PI * (t.m * p.x + t.n * p.y);
        acc += t.a * std::cos(ph) + t.b * std::sin(ph);
    }
    return acc;
}

} // namespace

TEST_CASE("flat family evaluates to the Minkowski form everywhere") {
    MetricSpec m = MetricSpec::flat();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 50; ++i) {
        MetricEval me = m.eval({u(rng), u(rng)});
        REQUIRE(me.g.xx == Approx(1.0).margin(1e-15));
        REQUIRE(me.g.xy == Approx(0.0).margin(1e-15));
        REQUIRE(me.g.yy == Approx(-1.0).margin(1e-15));
        REQUIRE(me.g.det() == Approx(-1.0).margin(1e-15));
        REQUIRE(me.gauss_curvature == Approx(0.0).margin(1e-12));
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    REQUIRE(me.christoffel[k][a][b] == Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("metric components agree with direct Fourier summation") {
    FourierSeries g11 = FourierSeries::constant(1.3);
    g11.add_term(1, 0, 0.05, -0.02);
    g11.add_term(2, 3, -0.01, 0.03);
    FourierSeries g12;
    g12.add_term(0, 1, 0.0, 0.07);
    g12.add_term(1, 1, 0.02, 0.0);
    FourierSeries g22 = FourierSeries::constant(-1.0);
    g22.add_term(3, -2, 0.04, 0.01);
    MetricSpec m(g11, g12, g22);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 40; ++i) {
        Vec2 p{u(rng), u(rng)};
        MetricEval me = m.eval(p);
        REQUIRE(me.g.xx == Approx(direct_eval(g11, p)).margin(1e-13));
        REQUIRE(me.g.xy == Approx(direct_eval(g12, p)).margin(1e-13));
        REQUIRE(me.g.yy == Approx(direct_eval(g22, p)).margin(1e-13));
    }
}

TEST_CASE("analytic derivatives match central differences") {
    MetricSpec m = MetricSpec::sheared(0.2);
    MetricSpec c = MetricSpec::conformal(0.1);
    const double h = 1e-5;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const MetricSpec* spec : {&m, &c}) {
        for (int i = 0; i < 25; ++i) {
            Vec2 p{u(rng), u(rng)};
            MetricEval me = spec->eval(p);
            for (int axis = 0; axis < 2; ++axis) {
                Vec2 e = axis == 0 ? Vec2{h, 0.0} : Vec2{0.0, h};
                MetricEval plus = spec->eval(p + e), minus = spec->eval(p - e);
                SymMat2 fd{(plus.g.xx - minus.g.xx) / (2 * h),
                           (plus.g.xy - minus.g.xy) / (2 * h),
                           (plus.g.yy - minus.g.yy) / (2 * h)};
                REQUIRE(me.dg[axis].xx == Approx(fd.xx).margin(1e-7));
                REQUIRE(me.dg[axis].xy == Approx(fd.xy).margin(1e-7));
                REQUIRE(me.dg[axis].yy == Approx(fd.yy).margin(1e-7));
            }
        }
    }
}

TEST_CASE("Christoffel symbols satisfy metric compatibility") {
    // d_i g_jk = Gamma^l_ij g_lk + Gamma^l_ik g_jl, checked numerically
    MetricSpec m = MetricSpec::conformal(0.12);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto g_at = [](const MetricEval& me, int i, int j) {
        return i == 0 ? (j == 0 ? me.g.xx : me.g.xy)
                      : (j == 0 ? me.g.xy : me.g.yy);
    };
    auto dg_at = [](const MetricEval& me, int a, int i, int j) {
        return i == 0 ? (j == 0 ? me.dg[a].xx : me.dg[a].xy)
                      : (j == 0 ? me.dg[a].xy : me.dg[a].yy);
    };
    for (int n = 0; n < 25; ++n) {
        Vec2 p{u(rng), u(rng)};
        MetricEval me = m.eval(p);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) {
                    double rhs = 0.0;
                    for (int l = 0; l < 2; ++l)
                        rhs += me.christoffel[l][i][j] * g_at(me, l, k) +
                               me.christoffel[l][i][k] * g_at(me, j, l);
                    REQUIRE(dg_at(me, i, j, k) == Approx(rhs).margin(1e-10));
                }
    }
}

TEST_CASE("Brioschi curvature matches the warped-metric closed form") {
    // finite-difference cross-check of the same formula on an independent
    // analytic metric with K == -1
    teik_test::WarpedMetric w;
    for (double x : {-1.0, -0.3, 0.0, 0.4, 1.2})
        REQUIRE(w.eval({x, 0.7}).gauss_curvature == Approx(-1.0).margin(1e-12));
}

TEST_CASE("conformal family: exp(2f)(dx^2 - dy^2) with f = A sin sin") {
    double A = 0.1;
    MetricSpec m = MetricSpec::conformal(A);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        Vec2 p{u(rng), u(rng)};
        double f = A * std::sin(2 * M_PI * p.x) * std::sin(2 * M_PI * p.y);
        MetricEval me = m.eval(p);
        REQUIRE(me.g.xx == Approx(std::exp(2 * f)).epsilon(1e-11));
        REQUIRE(me.g.xy == Approx(0.0).margin(1e-13));
        REQUIRE(me.g.yy == Approx(-std::exp(2 * f)).epsilon(1e-11));
    }
}

TEST_CASE("sheared family: g12 = A sin(2 pi x), unit diagonal") {
    double A = 0.2;
    MetricSpec m = MetricSpec::sheared(A);
    for (double x : {0.0, 0.13, 0.25, 0.5, 0.77}) {
        MetricEval me = m.eval({x, 0.4});
        REQUIRE(me.g.xx == Approx(1.0).margin(1e-15));
        REQUIRE(me.g.xy == Approx(A * std::sin(2 * M_PI * x)).margin(1e-13));
        REQUIRE(me.g.yy == Approx(-1.0).margin(1e-15));
        REQUIRE(me.g.det() < 0.0);
    }
}

TEST_CASE("evaluation is exactly lattice periodic") {
    MetricSpec m = MetricSpec::conformal(0.1);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> ki(-4, 4);
    for (int i = 0; i < 30; ++i) {
        Vec2 p{u(rng), u(rng)};
        Vec2 k{double(ki(rng)), double(ki(rng))};
        MetricEval a = m.eval(p), b = m.eval(p + k);
        REQUIRE(a.g.xx == Approx(b.g.xx).margin(1e-12));
        REQUIRE(a.g.xy == Approx(b.g.xy).margin(1e-12));
        REQUIRE(a.g.yy == Approx(b.g.yy).margin(1e-12));
    }
}

TEST_CASE("signature gate accepts Lorentz specs and rejects Riemannian ones") {
    REQUIRE(MetricSpec::flat().signature_check(32).ok);
    REQUIRE(MetricSpec::conformal(0.1).signature_check(32).ok);
    SignatureReport rep = MetricSpec::sheared(0.2).signature_check(64);
    REQUIRE(rep.ok);
    REQUIRE(rep.min_abs_det >= 1.0 - 1e-12); // det = -1 - g12^2
    REQUIRE(rep.max_g22 == Approx(-1.0).margin(1e-12));

    MetricSpec bad(FourierSeries::constant(1.0), FourierSeries(),
                   FourierSeries::constant(1.0));
    REQUIRE_THROWS_AS(bad.signature_check(8), SignatureError);
}

TEST_CASE("future frame is orthonormal and positively oriented") {
    MetricSpec m = MetricSpec::conformal(0.1);
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        Vec2 p{u(rng), u(rng)};
        Frame fr = m.future_frame(p);
        MetricEval me = m.eval(p);
        REQUIRE(me.g.quad(fr.T) == Approx(-1.0).margin(1e-12));
        REQUIRE(me.g.quad(fr.E) == Approx(1.0).margin(1e-12));
        REQUIRE(me.g.bilin(fr.T, fr.E) == Approx(0.0).margin(1e-12));
        REQUIRE(fr.T.y > 0.0);         // future pointing
        REQUIRE(cross(fr.E, fr.T) > 0.0);
    }
}

TEST_CASE("null directions are null, future, and positively ordered") {
    MetricSpec m = MetricSpec::sheared(0.2);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        Vec2 p{u(rng), u(rng)};
        auto nd = m.null_directions(p);
        MetricEval me = m.eval(p);
        REQUIRE(me.g.quad(nd[0]) == Approx(0.0).margin(1e-12));
        REQUIRE(me.g.quad(nd[1]) == Approx(0.0).margin(1e-12));
        REQUIRE(nd[0].y > 0.0);
        REQUIRE(nd[1].y > 0.0);
        REQUIRE(cross(nd[0], nd[1]) > 0.0);
    }
    // flat labels: minus family (1,1)/sqrt2, plus family (-1,1)/sqrt2
    auto flat_nd = MetricSpec::flat().null_directions({0.0, 0.0});
    double r2 = std::sqrt(0.5);
    REQUIRE((flat_nd[0] - Vec2{r2, r2}).norm() < 1e-12);
    REQUIRE((flat_nd[1] - Vec2{-r2, r2}).norm() < 1e-12);
}

TEST_CASE("unit_timelike rescales into the future unit shell") {
    MetricSpec m = MetricSpec::conformal(0.1);
    Vec2 p{0.3, 0.6};
    Vec2 v = unit_timelike(m, p, Vec2{0.2, 1.7});
    REQUIRE(m.eval(p).g.quad(v) == Approx(-1.0).margin(1e-12));
    REQUIRE(v.y > 0.0);
    REQUIRE_THROWS_AS(unit_timelike(m, p, Vec2{1.0, 0.0}), ConfigError);
}

TEST_CASE("causal classification bands") {
    MetricSpec m = MetricSpec::flat();
    Vec2 p{0.0, 0.0};
    REQUIRE(m.classify(p, {0.0, 1.0}) == CausalClass::future_timelike);
    REQUIRE(m.classify(p, {0.0, -1.0}) == CausalClass::past_timelike);
    REQUIRE(m.classify(p, {1.0, 0.0}) == CausalClass::spacelike);
    REQUIRE(m.classify(p, {1.0, 1.0}) == CausalClass::future_null);
    REQUIRE(m.classify(p, {-1.0, -1.0}) == CausalClass::past_null);
    REQUIRE(m.classify(p, {0.0, 0.0}) == CausalClass::zero);
}
