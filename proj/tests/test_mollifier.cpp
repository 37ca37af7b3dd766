#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vmlab/mollifier.hpp"
#include "vmlab/quadrature.hpp"
#include "vmlab/rng.hpp"

using namespace vmlab;
using Catch::Approx;

namespace {

// Independent reduction of the 3-D self-convolution via the spherical-cap
// integral; no use of the antiderivative trick the builder relies on.
double eta_oracle_2d(const MollifierProfile& m, double r) {
    double w = m.width;
    return 2.0 * kPi *
           integrate_adaptive(
               [&](double s) {
                   double inner = integrate_adaptive(
                       [&](double mu) {
                           double d2 = r * r + s * s - 2.0 * r * s * mu;
                           return m.radial_value(std::sqrt(std::max(d2, 0.0)));
                       },
                       -1.0, 1.0, 1e-12);
                   return s * s * m.radial_value(s) * inner;
               },
               0.0, w, 1e-12);
}

}  // namespace

TEST_CASE("base mollifier normalization") {
    // oracle: 4 pi int_0^1 (1-r^2)^4 r^2 dr inverted
    double I = integrate_adaptive(
        [](double r) {
            double q = 1.0 - r * r;
            return kFourPi * q * q * q * q * r * r;
        },
        0.0, 1.0, 1e-14);
    CHECK(base_mollifier::kNorm == Approx(1.0 / I).epsilon(1e-12));
    CHECK(base_mollifier::kNorm == Approx(3465.0 / (512.0 * kPi)).epsilon(1e-15));
    CHECK(base_mollifier::kNorm == Approx(2.154).margin(1e-3));
    CHECK(base_mollifier::value(0.0) == Approx(base_mollifier::kNorm));
}

TEST_CASE("scaled mollifier support and mass") {
    RegularizationParams p{64, 0.05, 4.0};
    auto m = build_mollifier(p);
    double w = std::pow(64.0, -0.05);
    CHECK(m.width == Approx(w).epsilon(1e-15));
    CHECK(m.radial_value(1.01 * w) == 0.0);
    CHECK(m.radial_value(0.999 * w) > 0.0);

    double mass = integrate_adaptive(
        [&](double r) { return kFourPi * r * r * m.radial_value(r); }, 0.0, w, 1e-13);
    CHECK(mass == Approx(1.0).margin(1e-10));
}

TEST_CASE("double mollifier table invariants") {
    RegularizationParams p{64, 0.15, 4.0};
    auto m = build_mollifier(p);
    auto eta = build_double_mollifier(m);
    double w = m.width;

    CHECK(eta->support_radius() == Approx(2.0 * w));
    CHECK(eta->value(2.01 * w) == 0.0);
    CHECK(eta->value(0.0) > 0.0);
    // non-increasing near 0 and nonnegative everywhere
    double prev = eta->value(0.0);
    for (int k = 1; k <= 40; ++k) {
        double v = eta->value(0.005 * k * w);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    for (int k = 0; k <= 200; ++k) CHECK(eta->value(0.01 * k * w) >= 0.0);

    // unit mass via an independent radial quadrature of the interpolant
    double mass = integrate_adaptive(
        [&](double r) { return kFourPi * r * r * eta->value(r); }, 0.0, 2.0 * w, 1e-12);
    CHECK(mass == Approx(1.0).margin(1e-8));
    CHECK(eta->mass(2.0 * w) == Approx(1.0).margin(1e-10));
}

TEST_CASE("double mollifier against independent 2-D reduction") {
    RegularizationParams p{32, 0.2, 4.0};
    auto m = build_mollifier(p);
    auto eta = build_double_mollifier(m);
    for (double frac : {0.05, 0.3, 0.77, 1.4, 1.9}) {
        double r = frac * m.width;
        CHECK(eta->value(r) == Approx(eta_oracle_2d(m, r)).margin(1e-9 * eta->value(0.0)));
    }
}

TEST_CASE("double mollifier mass against 3-D Monte Carlo convolution") {
    // Convolution of unit-mass kernels has unit mass; estimate
    // int eta = E_{y ~ chi}[ int chi(x - y) dx ] = 1 by sampling both factors.
    RegularizationParams p{16, 0.25, 4.0};
    auto m = build_mollifier(p);
    auto eta = build_double_mollifier(m);
    RngStream g(99123);
    // MC estimate of int eta dx with uniform samples in the bounding cube
    double w2 = eta->support_radius();
    double cube_vol = 8.0 * w2 * w2 * w2;
    std::size_t n = 400000;
    double acc = 0.0, acc2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 x{g.uniform(-w2, w2), g.uniform(-w2, w2), g.uniform(-w2, w2)};
        double v = eta->value(x.norm());
        acc += v;
        acc2 += v * v;
    }
    double mean = acc / double(n) * cube_vol;
    double var = acc2 / double(n) - (acc / double(n)) * (acc / double(n));
    double sigma = cube_vol * std::sqrt(std::max(var, 0.0) / double(n));
    CHECK(std::abs(mean - 1.0) <= 4.0 * sigma + 1e-3);
}

TEST_CASE("mollified coulomb field") {
    RegularizationParams p{64, 0.15, 4.0};
    auto eta = build_double_mollifier(build_mollifier(p));
    double w = p.mollifier_width();

    CHECK(mollified_coulomb_field(0.0, *eta) == 0.0);

    // exact shell theorem outside the support
    for (double r : {2.0 * w, 2.5 * w, 3.0 * w, 10.0 * w}) {
        CHECK(mollified_coulomb_field(r, *eta) ==
              Approx(1.0 / (kFourPi * r * r)).epsilon(1e-10));
    }

    // small-r behaviour ~ eta(0) r / 3
    double r0 = 1e-3 * w;
    CHECK(mollified_coulomb_field(r0, *eta) == Approx(eta->value(0.0) * r0 / 3.0).epsilon(1e-4));

    // direct quadrature of the vector convolution at an exterior point:
    // radial component of int eta(y) (x - y)/(4 pi |x-y|^3) dy
    double r = 2.2 * w;
    double direct = 0.5 * integrate_adaptive(
                              [&](double s) {
                                  double inner = integrate_adaptive(
                                      [&](double mu) {
                                          double d2 = r * r + s * s - 2.0 * r * s * mu;
                                          double d = std::sqrt(std::max(d2, 1e-300));
                                          return (r - s * mu) / (d2 * d);
                                      },
                                      -1.0, 1.0, 1e-12);
                                  return s * s * eta->value(s) * inner;
                              },
                              0.0, 2.0 * w, 1e-12);
    CHECK(mollified_coulomb_field(r, *eta) == Approx(direct).epsilon(1e-8));
}

TEST_CASE("ball overlap mass closed form") {
    RegularizationParams p{64, 0.15, 4.0};
    auto eta = build_double_mollifier(build_mollifier(p));
    double w2 = eta->support_radius();

    CHECK(ball_overlap_mass(3.0 * w2, 1.5 * w2, *eta) == 1.0);
    CHECK(ball_overlap_mass(0.4 * w2, 1.5 * w2, *eta) == 0.0);
    CHECK(ball_overlap_mass(0.7 * w2, 0.0, *eta) == Approx(eta->mass(0.7 * w2)));

    // Monte Carlo oracle: sample the mollifier ball by rejection, shift by s,
    // count the fraction inside radius r.
    RngStream g(5150);
    double eta0 = eta->value(0.0);
    auto draw = [&]() {
        for (;;) {
            Vec3 x{g.uniform(-w2, w2), g.uniform(-w2, w2), g.uniform(-w2, w2)};
            if (x.norm2() > w2 * w2) continue;
            if (g.uniform() * eta0 < eta->value(x.norm())) return x;
        }
    };
    for (auto [r, s] : {std::pair{0.9 * w2, 0.6 * w2}, {1.3 * w2, 1.0 * w2},
                        {0.5 * w2, 1.2 * w2}}) {
        std::size_t n = 200000, hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 y = draw() + Vec3{0, 0, s};
            if (y.norm() <= r) ++hits;
        }
        double frac = double(hits) / double(n);
        double sigma = std::sqrt(frac * (1.0 - frac) / double(n)) + 1e-6;
        CHECK(ball_overlap_mass(r, s, *eta) == Approx(frac).margin(4.0 * sigma));
    }
}

TEST_CASE("kernel scaling consistency when doubling N") {
    double theta = 0.12;
    auto ta = build_double_mollifier(build_mollifier({128, theta, 4.0}));
    auto tb = build_double_mollifier(build_mollifier({256, theta, 4.0}));
    double shrink = std::pow(2.0, -theta);
    CHECK(tb->support_radius() == Approx(ta->support_radius() * shrink).epsilon(1e-13));
    CHECK(tb->value(0.0) ==
          Approx(ta->value(0.0) * std::pow(2.0, 3.0 * theta)).epsilon(1e-10));
    // interior profile rescales exactly
    double r = 0.4 * ta->support_radius();
    CHECK(tb->value(r * shrink) ==
          Approx(ta->value(r) * std::pow(2.0, 3.0 * theta)).epsilon(1e-9));
}
