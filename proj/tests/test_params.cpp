#include <catch2/catch_amalgamated.hpp>

#include "vmlab/params.hpp"
#include "vmlab/rng.hpp"

using namespace vmlab;
using Catch::Approx;

TEST_CASE("hat_velocity basic values") {
    CHECK(hat_velocity({0, 0, 0}, 3.0) == Vec3{0, 0, 0});

    // 3/sqrt(1 + 9/16) = 3/(5/4) = 2.4
    Vec3 h = hat_velocity({3, 0, 0}, 4.0);
    CHECK(h.x == Approx(2.4).epsilon(1e-14));
    CHECK(h.y == 0.0);

    // Taylor regime: relative deflection below |v|^2/(2c^2)
    Vec3 big = hat_velocity({1e6, 0, 0}, 1e9);
    CHECK(std::abs(big.x - 1e6) / 1e6 <= 1e-6);
    CHECK(big.x == Approx(1e6 * (1.0 - 5e-7)).epsilon(1e-9));
}

TEST_CASE("hat_velocity properties on random velocities") {
    RngStream g(20260810);
    for (int k = 0; k < 2000; ++k) {
        double c = g.uniform(1.0, 64.0);
        double mag = g.uniform(0.0, 1000.0 * c);
        Vec3 v{g.normal(), g.normal(), g.normal()};
        v = v.normalized() * mag;
        Vec3 h = hat_velocity(v, c);
        CHECK(h.norm() < c);
        Vec3 hm = hat_velocity(-v, c);
        CHECK((h + hm).norm() <= 1e-12 * (1.0 + h.norm()));
        // |v - hat v| decreasing in c and below |v|^3 / (2 c^2)
        double d1 = (v - h).norm();
        double d2 = (v - hat_velocity(v, 2.0 * c)).norm();
        CHECK(d2 <= d1 * (1.0 + 1e-12));
        CHECK(d1 <= mag * mag * mag / (2.0 * c * c) + 1e-12);
    }
}

TEST_CASE("validate_exponents admissible set") {
    ExponentSet ok{0.1, 0.2, 0.2, 0.005, 0.004};
    auto res = validate_exponents(ok, true);
    CHECK(res.ok);
    CHECK(res.violations.empty());
}

TEST_CASE("validate_exponents strict rejections") {
    ExponentSet bad_alpha{0.2, 0.21, 0.21, 0.001, 0.001};
    CHECK_THROWS_AS(validate_exponents(bad_alpha, true), ConstraintError);
    CHECK_THROWS_WITH(validate_exponents(bad_alpha, true),
                      Catch::Matchers::ContainsSubstring("alpha >= 1/8"));

    // theta bound is (1 - 0.1 - 0.8)/16 = 0.00625; this theta also empties the
    // eta interval, so both constraints are reported
    ExponentSet bad_theta{0.1, 0.2, 0.2, 0.01, 0.004};
    CHECK_THROWS_WITH(validate_exponents(bad_theta, true),
                      Catch::Matchers::ContainsSubstring("theta >="));
    auto res = validate_exponents(bad_theta, false);
    CHECK_FALSE(res.ok);
    REQUIRE(res.violations.size() >= 1);
    CHECK(res.violations.front().find("theta >=") == 0);
}

TEST_CASE("validate_exponents rejects interval endpoints") {
    // alpha exactly at 1/8
    ExponentSet e{0.125, 0.2, 0.2, 0.001, 0.001};
    CHECK_FALSE(validate_exponents(e, false).ok);
    // theta exactly at the bracket value
    ExponentSet t{0.1, 0.2, 0.2, (1.0 - 0.1 - 0.8) / 16.0, 0.001};
    CHECK_FALSE(validate_exponents(t, false).ok);
    // eta exactly at the bracket value
    ExponentSet h{0.1, 0.2, 0.2, 0.005, (1.0 - 0.1 - 0.8 - 16.0 * 0.005) / 4.0};
    CHECK_FALSE(validate_exponents(h, false).ok);
}

TEST_CASE("regularization params derived width") {
    RegularizationParams p{64, 0.15, 8.0};
    CHECK(p.mollifier_width() == Approx(std::pow(64.0, -0.15)).epsilon(1e-15));
    RegularizationParams bad{64, 0.15, 0.5};
    CHECK_THROWS_AS(bad.validate(), ConstraintError);
}
