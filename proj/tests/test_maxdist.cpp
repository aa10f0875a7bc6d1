#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "teik/maxdist.hpp"
#include "teik/verify.hpp"

using namespace teik;
using Catch::Approx;

TEST_CASE("flat distance matches the closed form") {
    MetricSpec flat = MetricSpec::flat();
    ConeEstimate cone = estimate_cone(flat, 100.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int tested = 0;
    while (tested < 20) {
        Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
        double dx = b.x - a.x, dy = b.y - a.y;
        if (dy - std::abs(dx) < 0.05) continue; // want clearly timelike pairs
        ++tested;
        DistanceOptions dop;
        dop.cone = &cone;
        DistanceResult r = lorentz_distance(flat, a, b, dop);
        REQUIRE(r.status == CausalStatus::timelike);
        REQUIRE(r.value == Approx(std::sqrt(dy * dy - dx * dx)).margin(1e-7));
        REQUIRE(r.launch_chi == Approx(std::atanh(dx / dy)).margin(1e-5));
        REQUIRE(r.maximizer.has_value());
        REQUIRE((r.maximizer->samples.back().p - b).norm() < 1e-5);
    }
}

TEST_CASE("warm start reproduces the cold distance") {
    MetricSpec sheared = MetricSpec::sheared(0.05);
    Vec2 a{0.2, 0.1}, b{0.9, 2.7};
    DistanceResult cold = lorentz_distance(sheared, a, b);
    REQUIRE(cold.status == CausalStatus::timelike);

    DistanceOptions dop;
    detail::ChordBoost cb = detail::boost_of_chord(sheared.eval(a), b - a);
    REQUIRE(cb.inside);
    dop.hint = cb.chi;
    DistanceResult warm = lorentz_distance(sheared, a, b, dop);
    REQUIRE(warm.status == CausalStatus::timelike);
    REQUIRE(warm.value == Approx(cold.value).margin(1e-9));
}

TEST_CASE("status classification against the cone") {
    MetricSpec flat = MetricSpec::flat();
    ConeEstimate cone = estimate_cone(flat, 100.0);
    DistanceOptions dop;
    dop.cone = &cone;

    SECTION("past-pointing chord") {
        DistanceResult r = lorentz_distance(flat, {0, 0}, {0.0, -2.0}, dop);
        REQUIRE(r.status == CausalStatus::not_causally_related);
        REQUIRE(r.value == 0.0);
    }
    SECTION("spacelike chord") {
        DistanceResult r = lorentz_distance(flat, {0, 0}, {2.0, 0.1}, dop);
        REQUIRE(r.status == CausalStatus::not_causally_related);
    }
    SECTION("chord on the null line") {
        DistanceResult r = lorentz_distance(flat, {0, 0}, {1.0, 1.0}, dop);
        REQUIRE(r.status == CausalStatus::null_boundary);
        REQUIRE(r.value == 0.0);
    }
    SECTION("chord just inside the boundary band") {
        DistanceResult r =
            lorentz_distance(flat, {0, 0}, {1.0, 1.0 + 1e-4}, dop);
        REQUIRE(r.status == CausalStatus::null_boundary);
    }
    SECTION("coincident points") {
        DistanceResult r = lorentz_distance(flat, {0, 0}, {0, 0}, dop);
        REQUIRE(r.status == CausalStatus::not_causally_related);
    }
}

TEST_CASE("boost coordinates of chords at a point") {
    MetricSpec flat = MetricSpec::flat();
    MetricEval me = flat.eval({0, 0});

    detail::ChordBoost vertical = detail::boost_of_chord(me, {0.0, 1.0});
    REQUIRE(vertical.inside);
    REQUIRE(vertical.chi == Approx(0.0).margin(1e-12));

    detail::ChordBoost tilted = detail::boost_of_chord(me, {0.5, 2.0});
    REQUIRE(tilted.inside);
    REQUIRE(tilted.chi == Approx(std::atanh(0.25)).margin(1e-12));

    REQUIRE_FALSE(detail::boost_of_chord(me, {1.0, 1.0}).inside);  // null
    REQUIRE_FALSE(detail::boost_of_chord(me, {2.0, 0.0}).inside);  // spacelike
    REQUIRE_FALSE(detail::boost_of_chord(me, {0.0, -1.0}).inside); // past
}

TEST_CASE("distance is invariant under deck translations") {
    MetricSpec sheared = MetricSpec::sheared(0.05);
    ConeEstimate cone = estimate_cone(sheared, 100.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> k(-3, 3);
    for (int i = 0; i < 8; ++i) {
        Vec2 a{u(rng), u(rng)};
        Vec2 b = detail::causal_successor(sheared, cone, a, 1.0 + u(rng), rng);
        Vec2 shift{double(k(rng)), double(k(rng))};
        DistanceResult base = detail::warm_distance(sheared, cone, a, b);
        DistanceResult moved =
            detail::warm_distance(sheared, cone, a + shift, b + shift);
        REQUIRE(base.status == CausalStatus::timelike);
        REQUIRE(moved.status == CausalStatus::timelike);
        REQUIRE(moved.value == Approx(base.value).margin(1e-8));
    }
}

TEST_CASE("reverse triangle inequality along causal chains") {
    MetricSpec sheared = MetricSpec::sheared(0.05);
    ConeEstimate cone = estimate_cone(sheared, 100.0);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 12; ++i) {
        Vec2 x{u(rng), u(rng)};
        Vec2 y = detail::causal_successor(sheared, cone, x, 0.8 + u(rng), rng);
        Vec2 z = detail::causal_successor(sheared, cone, y, 0.8 + u(rng), rng);
        double dxy = detail::warm_distance(sheared, cone, x, y).value;
        double dyz = detail::warm_distance(sheared, cone, y, z).value;
        double dxz = detail::warm_distance(sheared, cone, x, z).value;
        REQUIRE(dxz >= dxy + dyz - 1e-6);
    }
}

TEST_CASE("variational cross-check agrees with shooting") {
    DistanceOptions dop;
    dop.cross_check = true;

    DistanceResult flat_r =
        lorentz_distance(MetricSpec::flat(), {0.1, 0.2}, {0.6, 2.4}, dop);
    REQUIRE(flat_r.method_agreement.has_value());
    REQUIRE(*flat_r.method_agreement < 1e-5);

    DistanceResult sh_r =
        lorentz_distance(MetricSpec::sheared(0.05), {0.1, 0.2}, {0.6, 2.4}, dop);
    REQUIRE(sh_r.method_agreement.has_value());
    REQUIRE(*sh_r.method_agreement < 1e-3);
}

TEST_CASE("flat distance field matches the closed form") {
    MetricSpec flat = MetricSpec::flat();
    Rect window{-1.5, 1.5, 2.0, 4.0};
    ScalarField f = distance_field(flat, {0, 0}, window, 21, 21);

    double worst_val = 0.0, worst_grad = 0.0;
    int n_checked = 0;
    for (int iy = 0; iy < f.ny; ++iy)
        for (int ix = 0; ix < f.nx; ++ix) {
            if (!f.is_valid(ix, iy)) continue;
            Vec2 q = f.node(ix, iy);
            double d = std::sqrt(q.y * q.y - q.x * q.x);
            worst_val =
                std::max(worst_val, std::abs(f.values[f.index(ix, iy)] - d));
            if (!f.one_sided[f.index(ix, iy)]) {
                Vec2 grad_exact{-q.x / d, -q.y / d}; // raised gradient of d
                worst_grad = std::max(
                    worst_grad, (f.gradient[f.index(ix, iy)] - grad_exact).norm());
            }
            ++n_checked;
        }
    REQUIRE(n_checked > 350);
    REQUIRE(worst_val < 1e-6);
    REQUIRE(worst_grad < 2e-3);

    EikonalReport er = verify_eikonal(f, flat);
    REQUIRE(er.n_valid == n_checked);
    REQUIRE(er.max_residual < 4e-3);
    REQUIRE(er.worst_ix >= 0);

    SECTION("interpolants and the chart boundary") {
        Vec2 q{0.37, 3.11};
        double d = std::sqrt(q.y * q.y - q.x * q.x);
        REQUIRE(f.covers(q));
        REQUIRE(f.value_at(q) == Approx(d).margin(1e-4));
        REQUIRE((f.velocity_at(q) - Vec2{q.x / d, q.y / d}).norm() < 2e-3);
        REQUIRE_FALSE(f.covers({5.0, 3.0}));
        REQUIRE_THROWS_AS(f.value_at({5.0, 3.0}), OutOfChart);
        REQUIRE_THROWS_AS(f.gradient_at({5.0, 3.0}), OutOfChart);
    }
}

TEST_CASE("distance field masks nodes off the cone interior") {
    MetricSpec flat = MetricSpec::flat();
    ScalarField f =
        distance_field(flat, {0, 0}, Rect{-4.0, 4.0, 0.5, 3.0}, 33, 11);
    // clearly spacelike node
    int ix_sp = 0, iy_sp = 0; // node (-4, 0.5)
    REQUIRE_FALSE(f.is_valid(ix_sp, iy_sp));
    // clearly timelike node: x = 0 at the top row
    REQUIRE(f.is_valid(16, 10));
    // the mask must track the cone, not the window
    int n_valid = 0;
    for (int iy = 0; iy < f.ny; ++iy)
        for (int ix = 0; ix < f.nx; ++ix)
            if (f.is_valid(ix, iy)) {
                Vec2 q = f.node(ix, iy);
                REQUIRE(q.y - std::abs(q.x) > 0.0);
                ++n_valid;
            }
    REQUIRE(n_valid > 50);

    REQUIRE_THROWS_AS(
        distance_field(flat, {0, 0}, Rect{2.0, 4.0, 0.1, 0.3}, 9, 9),
        EmptyWindow);
    REQUIRE_THROWS_AS(distance_field(flat, {0, 0}, Rect{0, 1, 2, 3}, 1, 5),
                      PreconditionError);
}

TEST_CASE("per-node polish keeps the interpolated field") {
    MetricSpec sheared = MetricSpec::sheared(0.05);
    Rect window{-0.5, 0.5, 2.0, 3.0};
    FieldOptions plain, polished;
    polished.polish = true;
    ScalarField a = distance_field(sheared, {0, 0}, window, 9, 9, 0.05, plain);
    ScalarField b =
        distance_field(sheared, {0, 0}, window, 9, 9, 0.05, polished);
    double worst = 0.0;
    for (int iy = 0; iy < a.ny; ++iy)
        for (int ix = 0; ix < a.nx; ++ix)
            if (a.is_valid(ix, iy) && b.is_valid(ix, iy))
                worst = std::max(worst, std::abs(a.values[a.index(ix, iy)] -
                                                 b.values[b.index(ix, iy)]));
    REQUIRE(worst < 1e-5);
}
