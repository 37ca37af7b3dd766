#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "vmlab/errors.hpp"
#include "vmlab/mollifier.hpp"
#include "vmlab/params.hpp"
#include "vmlab/quadrature.hpp"
#include "vmlab/rng.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab {

// Default initial law f0(x,v) = A (1-|x|^2/R^2)_+^2 (1-|v|^2/V^2)_+^2.
// Radially symmetric in x, isotropic in v, C1, compact support, unit mass:
// probability density for the i.i.d. initial data of both flows.
struct InitialDensity {
    double spatial_radius = 1.0;   // R, the paper's p0 bound
    double velocity_radius = 1.0;  // V, the paper's q0 bound

    double amplitude() const {
        double factor = 105.0 / (32.0 * kPi);
        return factor * factor /
               (std::pow(spatial_radius, 3) * std::pow(velocity_radius, 3));
    }

    double value(const Vec3& x, const Vec3& v) const {
        double qx = 1.0 - x.norm2() / (spatial_radius * spatial_radius);
        double qv = 1.0 - v.norm2() / (velocity_radius * velocity_radius);
        if (qx <= 0.0 || qv <= 0.0) return 0.0;
        return amplitude() * qx * qx * qv * qv;
    }

    // Spatial density rho0(r) = int f0 dv and its enclosed mass, closed forms.
    double rho0(double r) const {
        double q = 1.0 - r * r / (spatial_radius * spatial_radius);
        if (q <= 0.0) return 0.0;
        return 105.0 / (32.0 * kPi * std::pow(spatial_radius, 3)) * q * q;
    }
    double enclosed_mass(double r) const {
        double u = std::min(r / spatial_radius, 1.0);
        if (u <= 0.0) return 0.0;
        double u2 = u * u;
        return 105.0 / 8.0 * (u2 * u / 3.0 - 2.0 * u2 * u2 * u / 5.0 + u2 * u2 * u2 * u / 7.0);
    }

    void validate() const {
        if (!(spatial_radius > 0.0) || !(velocity_radius > 0.0))
            throw ConstraintError("initial-data radii must be positive");
    }
};

// Shell theorem on rho0: |E0| = enclosed mass / (4 pi r^2), Coulomb tail outside R.
inline double initial_electric_field(const InitialDensity& f0, double r) {
    if (r <= 0.0) return 0.0;
    return f0.enclosed_mass(r) / (kFourPi * r * r);
}

struct Sample {
    Vec3 x;
    Vec3 v;
};

namespace detail {
// Uniform draw in the unit ball by cube rejection; consumes a variable but
// per-sample-stream-local number of uniforms.
inline Vec3 uniform_ball(RngStream& g) {
    for (;;) {
        Vec3 p{g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0)};
        if (p.norm2() <= 1.0) return p;
    }
}
}  // namespace detail

// i.i.d. rejection sampling against the uniform law on the product ball.
// Sample i is a pure function of (stream, i), so any parallel split over i
// reproduces the serial output.
inline Sample sample_one(const InitialDensity& f0, RngStream stream) {
    constexpr int kMaxRejects = 1000000;
    for (int k = 0; k < kMaxRejects; ++k) {
        Vec3 x = detail::uniform_ball(stream) * f0.spatial_radius;
        Vec3 v = detail::uniform_ball(stream) * f0.velocity_radius;
        double qx = 1.0 - x.norm2() / (f0.spatial_radius * f0.spatial_radius);
        double qv = 1.0 - v.norm2() / (f0.velocity_radius * f0.velocity_radius);
        if (stream.uniform() < qx * qx * qv * qv) return {x, v};
    }
    throw InternalError("rejection sampler exceeded the rejection cap");
}

inline std::vector<Sample> sample_ensemble(const InitialDensity& f0, std::size_t count,
                                           std::uint64_t seed) {
    f0.validate();
    RngStream root(seed);
    std::vector<Sample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(sample_one(f0, root.child(i)));
    return out;
}

// Radial data for the mollified initial electric field E0^N = eta^N * E0 and
// its Kirchhoff propagation (the self-driven force channel). B0 and j0 are
// identically zero for the default isotropic law, which kills every
// velocity-coupled term of the self-driven force.
class InitialFields {
  public:
    InitialFields(const InitialDensity& f0, std::shared_ptr<const DoubleMollifierTable> eta,
                  std::size_t intervals = 1024)
        : f0_(f0), eta_(std::move(eta)) {
        f0.validate();
        r_end_ = f0.spatial_radius + eta_->support_radius();
        h_ = r_end_ / static_cast<double>(intervals);
        std::size_t n = intervals + 1;
        mass_.resize(n);
        rho_.resize(n);
        ecum_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            double r = static_cast<double>(k) * h_;
            mass_[k] = mollified_enclosed_mass(r);
            rho_[k] = mollified_rho(r);
        }
        ecum_[0] = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            double a = static_cast<double>(k - 1) * h_;
            double b = static_cast<double>(k) * h_;
            ecum_[k] = ecum_[k - 1] + gauss_fixed<16>([&](double u) { return field(u); }, a, b);
        }
    }

    const InitialDensity& density() const { return f0_; }
    const DoubleMollifierTable& eta() const { return *eta_; }
    double support_radius() const { return r_end_; }  // R + 2 N^{-theta}

    // |E0^N|(r); exactly Coulomb outside R + 2 N^{-theta}.
    double field(double r) const {
        if (r <= 0.0) return 0.0;
        if (r >= r_end_) return 1.0 / (kFourPi * r * r);
        return enclosed(r) / (kFourPi * r * r);
    }

    Vec3 field_vec(const Vec3& x) const {
        double r = x.norm();
        if (r <= 0.0) return {};
        return x * (field(r) / r);
    }

    // int_0^x |E0^N|(u) du with the analytic Coulomb tail.
    double field_cum(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= r_end_)
            return ecum_.back() + (1.0 / kFourPi) * (1.0 / r_end_ - 1.0 / x);
        return hermite(ecum_, x, [&](double u) { return field(u); });
    }

    // Enclosed mass of the doubly mollified charge density eta^N * rho0.
    double enclosed(double r) const {
        if (r <= 0.0) return 0.0;
        if (r >= r_end_) return 1.0;
        return hermite(mass_, r, [&](double u) { return kFourPi * u * u * rho_interp(u); });
    }

    // (eta^N * rho0)(r); the divergence-compatibility check d(mass)/dr = 4 pi r^2 rho.
    double mollified_rho_interp(double r) const {
        if (r < 0.0 || r >= r_end_) return 0.0;
        return rho_interp(r);
    }

  private:
    double mollified_enclosed_mass(double r) const {
        if (r <= 0.0) return 0.0;
        double lo = 0.0, hi = f0_.spatial_radius;
        return gauss_fixed<64>(
            [&](double s) {
                return kFourPi * s * s * f0_.rho0(s) * ball_overlap_mass(r, s, *eta_);
            },
            lo, hi);
    }

    double mollified_rho(double r) const {
        double w2 = eta_->support_radius();
        double R = f0_.spatial_radius;
        if (r >= R + w2) return 0.0;
        if (r < 1e-7 * r_end_) {
            return gauss_fixed<64>(
                [&](double s) { return kFourPi * s * s * f0_.rho0(s) * eta_->value(s); }, 0.0, R);
        }
        auto integrand = [&](double s) {
            return s * f0_.rho0(s) * (eta_->cum_u(r + s) - eta_->cum_u(std::abs(r - s)));
        };
        std::vector<double> cuts;
        for (double c : {r, w2 - r, r - w2})
            if (c > 0.0 && c < R) cuts.push_back(c);
        return 2.0 * kPi / r * integrate_piecewise(integrand, 0.0, R, cuts, 1e-14);
    }

    double rho_interp(double u) const {
        double pos = u / h_;
        std::size_t k = std::min(static_cast<std::size_t>(pos), rho_.size() - 2);
        double t = pos - static_cast<double>(k);
        return rho_[k] * (1.0 - t) + rho_[k + 1] * t;
    }

    template <class DerivFn>
    double hermite(const std::vector<double>& cum, double x, const DerivFn& deriv) const {
        double pos = x / h_;
        std::size_t k = std::min(static_cast<std::size_t>(pos), cum.size() - 2);
        double t = pos - static_cast<double>(k);
        double u0 = static_cast<double>(k) * h_, u1 = u0 + h_;
        double d0 = deriv(u0) * h_, d1 = deriv(u1) * h_;
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * cum[k] + (t3 - 2 * t2 + t) * d0 +
               (-2 * t3 + 3 * t2) * cum[k + 1] + (t3 - t2) * d1;
    }

    InitialDensity f0_;
    std::shared_ptr<const DoubleMollifierTable> eta_;
    double r_end_ = 1.0, h_ = 1.0;
    std::vector<double> mass_, rho_, ecum_;
};

}  // namespace vmlab
