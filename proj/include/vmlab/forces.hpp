#pragma once

#include <cmath>
#include <optional>

#include "vmlab/history.hpp"
#include "vmlab/initial_data.hpp"
#include "vmlab/quadrature.hpp"
#include "vmlab/retarded.hpp"
#include "vmlab/wave_kernel.hpp"

namespace vmlab {

namespace detail {

template <class F>
Vec3 gauss_vec3_n(const F& f, double a, double b, int nodes) {
    Vec3 acc{};
    auto run = [&](auto tag) {
        constexpr unsigned N = decltype(tag)::value;
        const auto& xs = boost::math::quadrature::gauss<double, N>::abscissa();
        const auto& ws = boost::math::quadrature::gauss<double, N>::weights();
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        Vec3 sum{};
        // boost stores only the non-negative abscissas
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (xs[k] == 0.0) {
                sum += f(mid) * ws[k];
            } else {
                sum += (f(mid + half * xs[k]) + f(mid - half * xs[k])) * ws[k];
            }
        }
        acc = sum * half;
    };
    switch (nodes) {
        case 16: run(std::integral_constant<unsigned, 16>{}); break;
        case 32: run(std::integral_constant<unsigned, 32>{}); break;
        case 64: run(std::integral_constant<unsigned, 64>{}); break;
        case 128: run(std::integral_constant<unsigned, 128>{}); break;
        default: run(std::integral_constant<unsigned, 256>{}); break;
    }
    return acc;
}

// Node-doubling Gauss-Legendre for vector integrands: 16 nodes upward until the
// max-norm change drops below rel_tol.
template <class F>
Vec3 gauss_doubling_vec3(const F& f, double a, double b, double rel_tol = 1e-6) {
    if (!(b > a)) return {};
    Vec3 prev = gauss_vec3_n(f, a, b, 16);
    for (int nodes : {32, 64, 128, 256}) {
        Vec3 cur = gauss_vec3_n(f, a, b, nodes);
        double scale = std::max({prev.norm_inf(), cur.norm_inf(), 1e-300});
        if ((cur - prev).norm_inf() <= rel_tol * scale) return cur;
        prev = cur;
        if (nodes == 256) {
            Vec3 fin = gauss_vec3_n(f, a, b, 256);
            double resid = (fin - cur).norm_inf() / scale;
            if (resid > 10.0 * rel_tol)
                throw ToleranceError("retarded-force quadrature stalled, relative residual " +
                                     std::to_string(resid));
        }
    }
    return prev;
}

}  // namespace detail

// One (i, j) summand of the pair-interaction force
//   - int_0^t ( vhat_j(s) dtau + c^2 grad_x ) Y^N(t - s, x_i(t) - x_j(s)) ds,
// without the 1/(N-1) weight. The integral clips at s = 0 and vanishes while
// the backward cone has not reached the source history.
inline Vec3 pair_force_f1(const Vec3& x_i_now, double t, const TrajectoryHistory& hist_j,
                          const SmoothedWaveKernel& kernel, double rel_tol = 1e-6) {
    double c = kernel.light_speed();
    auto win = find_retarded_window(hist_j, x_i_now, t, kernel.shell_half_width(), c);
    if (!win || !(win->s_hi > win->s_lo)) return {};
    auto integrand = [&](double s) {
        double tau = t - s;
        Vec3 d = x_i_now - hist_j.position_at(s);
        double r = d.norm();
        Vec3 term = hist_j.vhat_at(s) * kernel.d_tau(tau, r);
        if (r > 0.0) term += d * (c * c * kernel.d_r(tau, r) / r);
        return -term;
    };
    return detail::gauss_doubling_vec3(integrand, win->s_lo, win->s_hi, rel_tol);
}

// One (i, j) summand of
//   - int_0^t vhat_i(t) x ( vhat_j(s) x grad_x Y^N(t - s, x_i(t) - x_j(s)) ) ds,
// again without the 1/(N-1). The leading cross factor is constant in s.
inline Vec3 pair_force_f2(const Vec3& x_i_now, const Vec3& v_i_now, double t,
                          const TrajectoryHistory& hist_j, const SmoothedWaveKernel& kernel,
                          double rel_tol = 1e-6) {
    double c = kernel.light_speed();
    Vec3 vhat_i = hat_velocity(v_i_now, c);
    if (vhat_i.norm2() == 0.0) return {};
    auto win = find_retarded_window(hist_j, x_i_now, t, kernel.shell_half_width(), c);
    if (!win || !(win->s_hi > win->s_lo)) return {};
    auto inner = [&](double s) {
        double tau = t - s;
        Vec3 d = x_i_now - hist_j.position_at(s);
        double r = d.norm();
        if (r <= 0.0) return Vec3{};
        Vec3 grad = d * (kernel.d_r(tau, r) / r);
        return hist_j.vhat_at(s).cross(grad);
    };
    Vec3 integral = detail::gauss_doubling_vec3(inner, win->s_lo, win->s_hi, rel_tol);
    return -vhat_i.cross(integral);
}

// Self-driven force for the default radial data: B0 = 0, j0 = 0 and curl E0 = 0
// leave only the free-wave propagation of the mollified initial electric field,
//   Gamma(t, x) = d/dt [ t * (spherical mean of E0^N over radius ct) ](x),
// reduced to one dimension for the radial E0^N (phi(u) = u |E0^N|(u)):
//   Gamma_rad = (phi(r+ct) + phi(|r-ct|)) / (2r) - ct (Ecum(r+ct) - Ecum(|r-ct|)) / (2 r^2).
// At t = 0 this is exactly the mollified initial field E0^N. Independent of the
// particle velocity for the default data, so no velocity argument.
inline Vec3 self_force_gamma(const Vec3& x, double t, const InitialFields& fields,
                             const SmoothedWaveKernel& kernel) {
    if (t <= 0.0) return fields.field_vec(x);
    double r = x.norm();
    double A = kernel.light_speed() * t;
    double scale = std::max(A, fields.support_radius());
    if (r < 1e-7 * scale) return {};  // the spherical mean of a radial field vanishes at 0
    double hi = r + A, lo = std::abs(r - A);
    auto phi = [&](double u) { return u * fields.field(u); };
    double mag = (phi(hi) + phi(lo)) / (2.0 * r) -
                 A * (fields.field_cum(hi) - fields.field_cum(lo)) / (2.0 * r * r);
    return x * (mag / r);
}

}  // namespace vmlab
