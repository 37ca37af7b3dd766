#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "vmlab/quadrature.hpp"
#include "vmlab/rng.hpp"
#include "vmlab/wave_kernel.hpp"

using namespace vmlab;
using Catch::Approx;

namespace {

// Independent evaluation of Y^N(tau, x) = (R / 4 pi c) int_{|w|=1} eta(|x - R w|) dw
// through the polar-angle integral; shares only the eta table with the kernel.
double y_oracle_sphere(const SmoothedWaveKernel& k, double tau, double r) {
    double R = k.light_speed() * tau;
    double pre = R / (2.0 * k.light_speed());
    return pre * integrate_adaptive(
                     [&](double mu) {
                         double d2 = r * r + R * R - 2.0 * r * R * mu;
                         return k.eta().value(std::sqrt(std::max(d2, 0.0)));
                     },
                     -1.0, 1.0, 1e-13);
}

// Full 5-D Monte Carlo of the Kirchhoff double integral
// (tau / 4 pi) iint chi^N(x - p - c tau w) chi^N(p) dw dp, using only chi.
double y_oracle_mc(const MollifierProfile& m, double c, double tau, const Vec3& x,
                   std::uint64_t seed, double* sigma_out) {
    RngStream g(seed);
    double w = m.width;
    double R = c * tau;
    double cube = 8.0 * w * w * w;
    std::size_t n = 600000;
    double acc = 0.0, acc2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 p{g.uniform(-w, w), g.uniform(-w, w), g.uniform(-w, w)};
        double z = g.uniform(-1.0, 1.0);
        double phi = g.uniform(0.0, 2.0 * kPi);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 omega{s * std::cos(phi), s * std::sin(phi), z};
        Vec3 arg = x - p - omega * R;
        double v = m.radial_value(arg.norm()) * m.radial_value(p.norm());
        acc += v;
        acc2 += v * v;
    }
    // E over omega uniform on the sphere supplies the 4 pi; the p-integral the cube volume.
    double mean = acc / double(n);
    double var = std::max(0.0, acc2 / double(n) - mean * mean) / double(n);
    double scale = tau / (4.0 * kPi) * cube * kFourPi;
    if (sigma_out) *sigma_out = scale * std::sqrt(var);
    return scale * mean;
}

}  // namespace

TEST_CASE("wave kernel radial reduction verified against 3-D quadrature") {
    RegularizationParams p{64, 0.15, 4.0};
    auto kernel = make_wave_kernel(p);
    double w = p.mollifier_width();
    double tau = 0.35;
    double R = p.light_speed * tau;

    // three radii across the smeared shell, checked before trusting the table
    for (double r : {R - 1.2 * w, R, R + 1.2 * w}) {
        double got = kernel.value(tau, r);
        CHECK(got == Approx(y_oracle_sphere(kernel, tau, r)).margin(1e-10 * (1.0 + got)));
        double sigma = 0.0;
        double mc = y_oracle_mc(build_mollifier(p), p.light_speed, tau, {0, 0, r}, 777, &sigma);
        CHECK(std::abs(got - mc) <= 4.0 * sigma + 1e-6 * std::abs(got));
    }
}

TEST_CASE("wave kernel support and mass") {
    for (auto [n, theta, c] : {std::tuple{16, 0.1, 2.0}, {64, 0.15, 4.0}, {256, 0.3, 16.0}}) {
        RegularizationParams p{n, theta, c};
        auto kernel = make_wave_kernel(p);
        double w = p.mollifier_width();
        for (double tau : {0.1, 0.5, 1.3}) {
            double R = c * tau;
            CHECK(kernel.value(tau, R + 3.0 * w) == 0.0);
            CHECK(kernel.value(tau, R + 2.0 * w) == 0.0);
            double lo = std::max(0.0, R - 2.0 * w), hi = R + 2.0 * w;
            double mass = integrate_adaptive(
                [&](double r) { return kFourPi * r * r * kernel.value(tau, r); }, lo, hi, 1e-12);
            CHECK(mass == Approx(tau).epsilon(1e-6));
        }
    }
}

TEST_CASE("wave kernel derivatives match finite differences") {
    RegularizationParams p{64, 0.15, 4.0};
    auto kernel = make_wave_kernel(p);
    double w = p.mollifier_width();
    double tau = 0.5, R = p.light_speed * tau;
    double ymax = 0.0;
    for (double r = R - 2.0 * w; r < R + 2.0 * w; r += 0.05 * w)
        ymax = std::max(ymax, std::abs(kernel.value(tau, r)));

    double h = 1e-5 * w;
    for (double r : {R - 1.5 * w, R - 0.4 * w, R + 0.3 * w, R + 1.5 * w}) {
        double y = kernel.value(tau, r);
        if (std::abs(y) <= 1e-3 * ymax) continue;
        double fd_r = (kernel.value(tau, r + h) - kernel.value(tau, r - h)) / (2.0 * h);
        double fd_t =
            (kernel.value(tau + h / p.light_speed, r) - kernel.value(tau - h / p.light_speed, r)) /
            (2.0 * h / p.light_speed);
        CHECK(kernel.d_r(tau, r) == Approx(fd_r).epsilon(0.01));
        CHECK(kernel.d_tau(tau, r) == Approx(fd_t).epsilon(0.01));
    }
}

TEST_CASE("wave kernel satisfies the homogeneous wave equation") {
    RegularizationParams p{64, 0.15, 4.0};
    auto kernel = make_wave_kernel(p);
    double w = p.mollifier_width();
    double c = p.light_speed;
    double shw = kernel.shell_half_width();
    double tau = 5.0 * w / c;  // past the source region
    double R = c * tau;
    double ymax = 0.0;
    for (double r = std::max(0.0, R - shw); r < R + shw; r += 0.01 * w)
        ymax = std::max(ymax, std::abs(kernel.value(tau, r)));
    double bound = 1e-3 * ymax / (shw * shw);

    double h = w / 1024.0;
    for (double r : {R - 1.1 * w, R - 0.3 * w, R + 0.5 * w, R + 1.4 * w}) {
        auto lap = [&](double rr) {
            // radial Laplacian via (1/r) d2/dr2 (r Y)
            double a = (rr - h) * kernel.value(tau, rr - h);
            double b = rr * kernel.value(tau, rr);
            double cc = (rr + h) * kernel.value(tau, rr + h);
            return (a - 2.0 * b + cc) / (h * h * rr);
        };
        double dtt = (kernel.value(tau + h / c, r) - 2.0 * kernel.value(tau, r) +
                      kernel.value(tau - h / c, r)) /
                     ((h / c) * (h / c));
        double resid = std::abs(dtt - c * c * lap(r));
        CHECK(resid <= bound);
        // the analytic second derivative agrees with the FD one
        CHECK(kernel.d_tau_tau(tau, r) == Approx(dtt).margin(bound));
    }
}

TEST_CASE("wave kernel grid materialization and validation") {
    RegularizationParams p{32, 0.2, 2.0};
    auto kernel = build_wave_kernel(p, 0.5);
    CHECK(kernel.has_grid());
    CHECK(kernel.n_tau() > 8);
    CHECK(kernel.n_r() > 8);

    WaveKernelGrid coarse = default_wave_grid(p, 0.5);
    coarse.r_step = p.mollifier_width();  // violates shell_half_width / 8
    CHECK_THROWS_AS(build_wave_kernel(p, 0.5, &coarse), ConfigError);
}

TEST_CASE("wave kernel cache round-trips bit-identically") {
    namespace fs = std::filesystem;
    RegularizationParams p{32, 0.2, 2.0};
    fs::path dir = fs::temp_directory_path() / "vmlab_wk_cache_test";
    fs::remove_all(dir);

    auto fresh = build_wave_kernel(p, 0.4, nullptr, &dir);   // miss: builds and stores
    auto cached = build_wave_kernel(p, 0.4, nullptr, &dir);  // hit: loads
    REQUIRE(cached.grid_y().size() == fresh.grid_y().size());
    CHECK(cached.grid_y() == fresh.grid_y());
    CHECK(cached.grid_d_tau() == fresh.grid_d_tau());
    CHECK(cached.grid_d_r() == fresh.grid_d_r());
    fs::remove_all(dir);
}
