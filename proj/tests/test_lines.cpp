#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "teik/lines.hpp"

using namespace teik;
using Catch::Approx;

TEST_CASE("flat periodic lines close with the closed-form period") {
    MetricSpec flat = MetricSpec::flat();

    SECTION("vertical class from a generic base point") {
        PeriodicLine line = find_periodic_line(flat, {0.3, 0.4}, {0, 1});
        REQUIRE(line.period_length == Approx(1.0).margin(1e-8));
        REQUIRE(line.period_parameter == Approx(1.0).margin(1e-7));
        REQUIRE(line.closure_defect < 1e-8);
        REQUIRE(line.defect_history.size() == 3);
        REQUIRE((line.initial_velocity - Vec2{0.0, 1.0}).norm() < 1e-7);
        REQUIRE((line.direction() - Vec2{0.0, 1.0}).norm() < 1e-12);
    }

    SECTION("boosted class (1,2)") {
        PeriodicLine line = find_periodic_line(flat, {0.1, 0.9}, {1, 2});
        double r3 = std::sqrt(3.0);
        REQUIRE(line.period_length == Approx(r3).margin(1e-8));
        Vec2 v_exact{1.0 / r3, 2.0 / r3};
        REQUIRE((line.initial_velocity - v_exact).norm() < 1e-7);
        REQUIRE(line.deck == std::array<int, 2>{1, 2});
    }
}

TEST_CASE("vertical lines of the shear family have unit period everywhere") {
    // g12 depends on x only, so every vertical line is a unit-speed geodesic
    MetricSpec sheared = MetricSpec::sheared(0.05);
    for (double x0 : {0.0, 0.21, 0.77}) {
        PeriodicLine line = find_periodic_line(sheared, {x0, 0.0}, {0, 1});
        REQUIRE(line.period_length == Approx(1.0).margin(1e-7));
        REQUIRE(line.closure_defect < 1e-6);
    }
}

TEST_CASE("reflection-symmetric vertical of the conformal family") {
    // along x = 1/4 the conformal factor is independent of x to first order,
    // so that vertical is a geodesic; its period is the Bessel average
    // of exp(f) over one period: I0(amplitude)
    MetricSpec conf = MetricSpec::conformal(0.1);
    PeriodicLine line = find_periodic_line(conf, {0.25, 0.3}, {0, 1});
    double bessel = std::cyl_bessel_i(0.0, 0.1);
    REQUIRE(line.period_length == Approx(bessel).margin(1e-6));
    REQUIRE(line.closure_defect < 1e-6);

    // a generic base point is NOT on the unique vertical periodic line
    REQUIRE_THROWS_AS(find_periodic_line(conf, {0.5, 0.5}, {0, 1}),
                      NotClosing);
}

TEST_CASE("periodic line preconditions") {
    MetricSpec flat = MetricSpec::flat();
    REQUIRE_THROWS_AS(find_periodic_line(flat, {0, 0}, {0, 0}),
                      PreconditionError);
    REQUIRE_THROWS_AS(find_periodic_line(flat, {0, 0}, {0, 2}),
                      PreconditionError); // not primitive
    REQUIRE_THROWS_AS(find_periodic_line(flat, {0, 0}, {2, 1}),
                      PreconditionError); // outside the cone
}

TEST_CASE("rational direction detection") {
    std::array<int, 2> k;
    REQUIRE(detail::rational_direction(normalized(Vec2{0.6, 0.8}), 20.0, k));
    REQUIRE(k == std::array<int, 2>{3, 4});
    REQUIRE(detail::rational_direction(Vec2{0.0, 1.0}, 20.0, k));
    REQUIRE(k == std::array<int, 2>{0, 1});
    REQUIRE(detail::rational_direction(normalized(Vec2{-0.6, 0.8}), 20.0, k));
    REQUIRE(k == std::array<int, 2>{-3, 4});
    REQUIRE_FALSE(
        detail::rational_direction(normalized(Vec2{1.0, M_PI}), 20.0, k));
}

TEST_CASE("continued-fraction convergents approximate the slope") {
    double phi = 0.5 * (1.0 + std::sqrt(5.0));
    Vec2 alpha = normalized(Vec2{1.0, 2.0 * phi});
    auto cvs = detail::convergent_vectors(alpha, 200.0);
    REQUIRE(cvs.size() >= 3);
    double s = alpha.x / alpha.y;
    for (const auto& c : cvs) {
        REQUIRE(c[1] > 0);
        // classical quality bound |s - h/k| < 1/k^2
        REQUIRE(std::abs(s - double(c[0]) / c[1]) < 1.0 / (double(c[1]) * c[1]));
    }
}

TEST_CASE("rays with rational direction delegate to the periodic line") {
    MetricSpec flat = MetricSpec::flat();
    Ray ray = ray_toward(flat, {0.3, 0.4}, {0.0, 1.0}, 60.0);
    REQUIRE(ray.delegated_rational);
    REQUIRE((ray.direction.alpha - Vec2{0.0, 1.0}).norm() < 1e-9);
    REQUIRE(ray.direction.D < 1e-6);
    REQUIRE(ray.geodesic.t_end() == Approx(60.0).margin(1e-9));

    Ray boosted = ray_toward(flat, {0.0, 0.0}, normalized(Vec2{1.0, 2.0}), 60.0);
    REQUIRE(boosted.delegated_rational);
    REQUIRE((boosted.direction.alpha - normalized(Vec2{1.0, 2.0})).norm() <
            1e-9);
}

TEST_CASE("rays fall back to the long chord off the periodic line") {
    MetricSpec conf = MetricSpec::conformal(0.1);
    RayOptions ro;
    ro.chord_horizon = 300.0; // keep the far shot affordable in a unit test
    Ray ray = ray_toward(conf, {0.5, 0.5}, {0.0, 1.0}, 40.0, ro);
    REQUIRE_FALSE(ray.delegated_rational);
    REQUIRE(ray.convergents.empty());
    REQUIRE((ray.direction.alpha - Vec2{0.0, 1.0}).norm() < 1e-3);
}

TEST_CASE("irrational directions extrapolate from convergent lines") {
    // the shear family is integrable: every rational class has a periodic
    // line through every point, so the convergent route stays available
    MetricSpec sheared = MetricSpec::sheared(0.05);
    double phi = 0.5 * (1.0 + std::sqrt(5.0));
    Vec2 alpha = normalized(Vec2{1.0, 2.0 * phi});
    Ray ray = ray_toward(sheared, {0.2, 0.1}, alpha, 60.0);
    REQUIRE_FALSE(ray.delegated_rational);
    REQUIRE(ray.convergents.size() >= 1);
    REQUIRE(detail::angle_between(ray.direction.alpha, alpha) < 2e-3);
}

TEST_CASE("ray preconditions") {
    MetricSpec flat = MetricSpec::flat();
    REQUIRE_THROWS_AS(ray_toward(flat, {0, 0}, {0.9, 0.1}, 60.0),
                      PreconditionError); // outside the cone
    REQUIRE_THROWS_AS(ray_toward(flat, {0, 0}, {0.0, 1.0}, 5.0),
                      PreconditionError); // horizon too short
}
