#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vmlab/history.hpp"
#include "vmlab/retarded.hpp"

using namespace vmlab;
using Catch::Approx;

namespace {

Vec3 v_analytic(double t) { return {std::sin(t), std::cos(2.0 * t), 0.3 * t}; }
Vec3 a_analytic(double t) { return {std::cos(t), -2.0 * std::sin(2.0 * t), 0.3}; }

// reference x(t) for dx/dt = vhat(v_analytic(t)); the integrand depends on t
// only, so composite Simpson at a fine substep is the reference integrator
std::vector<Vec3> reference_positions(double c, double h, std::size_t steps) {
    std::vector<Vec3> out;
    out.reserve(steps + 1);
    Vec3 x{0.2, -0.1, 0.0};
    out.push_back(x);
    auto f = [&](double tt) { return hat_velocity(v_analytic(tt), c); };
    double t = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        x += (f(t) + f(t + 0.5 * h) * 4.0 + f(t + h)) * (h / 6.0);
        out.push_back(x);
        t += h;
    }
    return out;
}

}  // namespace

TEST_CASE("hermite dense output converges at fourth order") {
    double c = 4.0;
    double t_end = 2.0;
    double err_prev = 0.0;
    for (int halvings = 0; halvings < 3; ++halvings) {
        double dt = 0.1 / (1 << halvings);
        auto steps = static_cast<std::size_t>(std::round(t_end / dt));
        auto ref = reference_positions(c, dt / 8.0, steps * 8);

        TrajectoryHistory h(dt, c);
        for (std::size_t k = 0; k <= steps; ++k) {
            double t = static_cast<double>(k) * dt;
            h.append(t, ref[k * 8], v_analytic(t), a_analytic(t));
        }
        double err = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            for (int m = 1; m < 8; ++m) {
                double s = static_cast<double>(k) * dt + m * dt / 8.0;
                err = std::max(err, (h.position_at(s) - ref[k * 8 + m]).norm());
                err = std::max(err, (h.velocity_at(s) - v_analytic(s)).norm());
            }
        }
        if (halvings > 0) {
            double ratio = err_prev / err;
            CHECK(ratio > 10.0);  // fourth order gives 16
            CHECK(ratio < 40.0);
        }
        err_prev = err;
    }
}

TEST_CASE("retarded window for a static source") {
    double c = 4.0, w2 = 0.2;  // kernel support half-width 2 N^{-theta}
    double d = 2.0, t = 1.5;
    TrajectoryHistory h = make_linear_history({0, 0, 0}, {0, 0, 0}, 0.01, t, c);

    auto win = find_retarded_window(h, {d, 0, 0}, t, w2, c);
    REQUIRE(win.has_value());
    CHECK(win->s_star == Approx(t - d / c).margin(1e-12));
    CHECK(win->s_lo == Approx(t - (d + w2) / c).margin(1e-10));
    CHECK(win->s_hi == Approx(t - (d - w2) / c).margin(1e-10));
    CHECK(win->s_lo <= win->s_star);
    CHECK(win->s_star <= win->s_hi);

    // cone not yet arrived
    double t_early = (d - w2) / c - 0.01;
    TrajectoryHistory h2 = make_linear_history({0, 0, 0}, {0, 0, 0}, 0.001, t_early, c);
    CHECK_FALSE(find_retarded_window(h2, {d, 0, 0}, t_early, w2, c).has_value());

    // just after arrival the window clips at s = 0
    double t_clip = (d - w2) / c + 0.005;
    TrajectoryHistory h3 = make_linear_history({0, 0, 0}, {0, 0, 0}, 0.001, t_clip, c);
    auto win3 = find_retarded_window(h3, {d, 0, 0}, t_clip, w2, c);
    REQUIRE(win3.has_value());
    CHECK(win3->s_lo == 0.0);
}

TEST_CASE("retarded time matches the Lienard-Wiechert closed form") {
    double c = 4.0;
    Vec3 w{0.5 * c, 0, 0};  // |w| = 0.5 c
    Vec3 x0{0, 0, 0};
    Vec3 x_obs{1.0, 2.0, 0.5};
    double t = 1.2;
    TrajectoryHistory h = make_linear_history(x0, w, 1e-3, t, c);

    auto win = find_retarded_window(h, x_obs, t, 0.05, c);
    REQUIRE(win.has_value());

    // quadratic |x_obs - x0 - w s| = c (t - s)
    Vec3 delta = x_obs - x0;
    double A = w.norm2() - c * c;
    double B = 2.0 * (c * c * t - delta.dot(w));
    double C = delta.norm2() - c * c * t * t;
    double disc = std::sqrt(B * B - 4.0 * A * C);
    double s1 = (-B + disc) / (2.0 * A), s2 = (-B - disc) / (2.0 * A);
    double s_exact = (s1 <= t && s1 >= 0.0) ? s1 : s2;
    REQUIRE((s_exact >= 0.0 && s_exact <= t));
    CHECK(std::abs((x_obs - (x0 + w * s_exact)).norm() - c * (t - s_exact)) < 1e-12);

    CHECK(std::abs(win->s_star - s_exact) <= 1e-9);
}

TEST_CASE("history eviction keeps the recent window intact") {
    double c = 2.0, dt = 0.01;
    TrajectoryHistory h = make_linear_history({0, 0, 0}, {0.3, 0, 0}, dt, 3.0, c);
    Vec3 probe = h.position_at(2.9);
    h.evict_before(1.0);
    CHECK(h.front_time() >= 1.0 - 2.0 * dt);
    CHECK((h.position_at(2.9) - probe).norm() == 0.0);

    // a window that would need evicted records is reported, not silently wrong
    TrajectoryHistory far = make_linear_history({0, 0, 0}, {0, 0, 0}, dt, 3.0, c);
    far.evict_before(2.5);
    CHECK_THROWS_AS(find_retarded_window(far, {1.0, 0, 0}, 3.0, 0.05, c), InternalError);
}
