#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "vmlab/errors.hpp"
#include "vmlab/history.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab {

// Integration window of the retarded pair integrand: the set of past times s
// where the smeared light-cone kernel Y^N(t-s, x_i(t) - x_j(s)) is nonzero,
// i.e. | |x_i - x_j(s)| - c(t-s) | <= 2 N^{-theta}.
struct RetardedWindow {
    double s_star = 0.0;  // light-cone crossing; 0 when the cone clips at s = 0
    double s_lo = 0.0;
    double s_hi = 0.0;
    bool clipped_at_zero = false;
};

namespace detail {

// g(s) = c(t-s) - |x_i - x_j(s)| is strictly decreasing in s because the
// source speed |dx_j/ds| = |vhat_j| stays below c.
struct ConeGap {
    const TrajectoryHistory& hist;
    Vec3 x_now;
    double t;
    double c;

    double operator()(double s) const { return c * (t - s) - (x_now - hist.position_at(s)).norm(); }

    double derivative(double s) const {
        Vec3 d = x_now - hist.position_at(s);
        double r = d.norm();
        if (r <= 0.0) return -c;
        return -c + d.dot(hist.vhat_at(s)) / r;
    }
};

// Solve g(s) = target on [lo, hi] with g(lo) >= target >= g(hi): bisection to a
// tight bracket, then Newton polish. Monotonicity makes both safe.
inline double solve_cone(const ConeGap& g, double target, double lo, double hi) {
    double glo = g(lo) - target, ghi = g(hi) - target;
    if (glo < 0.0 || ghi > 0.0)
        throw NumericalError("cone root-finder called without a bracket: g(lo)-target=" +
                             std::to_string(glo) + " g(hi)-target=" + std::to_string(ghi));
    int iters = 0;
    double a = lo, b = hi;
    while (b - a > 1e-13 * std::max(1.0, std::abs(b)) && iters < 200) {
        double mid = 0.5 * (a + b);
        ((g(mid) - target) >= 0.0 ? a : b) = mid;
        ++iters;
    }
    double s = 0.5 * (a + b);
    for (int k = 0; k < 4; ++k) {
        double f = g(s) - target;
        double fp = g.derivative(s);
        if (fp == 0.0) break;
        double next = s - f / fp;
        if (next < lo || next > hi) break;
        s = next;
    }
    if (iters >= 200)
        throw NumericalError("cone root-finder failed to converge after 200 iterations, g(a)=" +
                             std::to_string(g(a)) + " g(b)=" + std::to_string(g(b)));
    return s;
}

}  // namespace detail

// Localizes the retarded integration window for one source history against an
// observation point x_i_now at time t. Returns nothing when the backward cone
// has not reached the source's trajectory (early times); bounds clip at s = 0.
inline std::optional<RetardedWindow> find_retarded_window(const TrajectoryHistory& history_j,
                                                          const Vec3& x_i_now, double t,
                                                          double support_half_width, double c) {
    if (history_j.empty() || t <= history_j.front_time()) return std::nullopt;
    detail::ConeGap g{history_j, x_i_now, t, c};
    double s_min = history_j.front_time();
    double g0 = g(s_min);
    double w = support_half_width;

    if (g0 < -w) return std::nullopt;  // cone not yet arrived
    if (s_min > 0.0 && g0 < w)
        throw InternalError("history evicted records still inside the retarded window");

    RetardedWindow win;
    double gt = g(t);  // = -|x_i(t) - x_j(t)| <= 0

    win.s_lo = (g0 <= w) ? s_min : detail::solve_cone(g, w, s_min, t);
    win.s_hi = (gt >= -w) ? t : detail::solve_cone(g, -w, win.s_lo, t);
    if (g0 <= 0.0) {
        win.s_star = s_min;
        win.clipped_at_zero = true;
    } else {
        win.s_star = detail::solve_cone(g, 0.0, win.s_lo, t);
    }
    return win;
}

}  // namespace vmlab
