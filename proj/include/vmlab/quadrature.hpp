#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vmlab/errors.hpp"

namespace vmlab {

// Adaptive Gauss-Kronrod on [a, b] to an absolute tolerance.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-12) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, 15, abs_tol, &err);
    if (err > std::max(abs_tol * 100.0, 1e-9 * std::abs(v)) && err > 1e-9)
        throw ToleranceError("quadrature did not reach tolerance, residual " + std::to_string(err));
    return v;
}

// Adaptive integration split at known breakpoints (kinks of piecewise-smooth integrands).
template <class F>
double integrate_piecewise(const F& f, double a, double b, std::vector<double> breaks,
                           double abs_tol = 1e-13) {
    if (!(b > a)) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        double lo = std::clamp(breaks[k], a, b);
        double hi = std::clamp(breaks[k + 1], a, b);
        if (hi - lo <= 0.0) continue;
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, lo, hi, 12, abs_tol, &err);
    }
    return total;
}

template <unsigned N, class F>
double gauss_fixed(const F& f, double a, double b) {
    return boost::math::quadrature::gauss<double, N>::integrate(f, a, b);
}

// Gauss-Legendre with node doubling until the relative change drops below rel_tol.
// Starts at 16 nodes; caps at 256 and reports the achieved residual on failure.
template <class F>
double gauss_doubling(const F& f, double a, double b, double rel_tol = 1e-6) {
    if (!(b > a)) return 0.0;
    double prev = gauss_fixed<16>(f, a, b);
    double cur = gauss_fixed<32>(f, a, b);
    double scale = std::max({std::abs(prev), std::abs(cur), 1e-300});
    if (std::abs(cur - prev) <= rel_tol * scale) return cur;
    prev = cur;
    cur = gauss_fixed<64>(f, a, b);
    scale = std::max({std::abs(prev), std::abs(cur), 1e-300});
    if (std::abs(cur - prev) <= rel_tol * scale) return cur;
    prev = cur;
    cur = gauss_fixed<128>(f, a, b);
    scale = std::max({std::abs(prev), std::abs(cur), 1e-300});
    if (std::abs(cur - prev) <= rel_tol * scale) return cur;
    prev = cur;
    cur = gauss_fixed<256>(f, a, b);
    scale = std::max({std::abs(prev), std::abs(cur), 1e-300});
    double resid = std::abs(cur - prev) / scale;
    if (resid > rel_tol * 10.0)
        throw ToleranceError("node-doubling quadrature stalled, relative residual " +
                             std::to_string(resid));
    return cur;
}

// Least-squares slope of log(y) against log(x); used by the convergence-rate reports.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_abs_residual = 0.0;  // in log space
    std::size_t points = 0;
};

inline SlopeFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    SlopeFit out;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (xs[i] > 0.0 && ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    out.points = lx.size();
    if (lx.size() < 2) return out;
    double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double denom = n * sxx - sx * sx;
    out.slope = (n * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / n;
    for (std::size_t i = 0; i < lx.size(); ++i)
        out.max_abs_residual =
            std::max(out.max_abs_residual, std::abs(ly[i] - out.slope * lx[i] - out.intercept));
    return out;
}

}  // namespace vmlab
