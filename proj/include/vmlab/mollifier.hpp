#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "vmlab/errors.hpp"
#include "vmlab/params.hpp"
#include "vmlab/quadrature.hpp"

namespace vmlab {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kFourPi = 4.0 * kPi;

// Base bump chi(x) = C (1 - |x|^2)^4 on |x| <= 1 with unit mass.
// C^3 contact at the boundary is enough smoothness for every quadrature and
// derivative used downstream; the closed-form radial antiderivative
// Q(x) = int_0^x u chi(u) du makes the self-convolution integrands piecewise
// polynomial.
namespace base_mollifier {

// 4 pi int_0^1 (1-u^2)^4 u^2 du = 4 pi * 128/3465, so C = 3465/(512 pi).
inline constexpr double kNorm = 3465.0 / (512.0 * kPi);

inline double value(double u) {
    if (u >= 1.0) return 0.0;
    double q = 1.0 - u * u;
    double q2 = q * q;
    return kNorm * q2 * q2;
}

inline double antider_u(double x) {  // int_0^x u chi(u) du
    if (x >= 1.0) return kNorm / 10.0;
    double q = 1.0 - x * x;
    double q2 = q * q;
    return kNorm / 10.0 * (1.0 - q2 * q2 * q);
}

}  // namespace base_mollifier

// Scaled profile chi^N(x) = N^{3 theta} chi(N^theta x), support radius N^{-theta}.
struct MollifierProfile {
    double theta = 0.0;
    int n = 1;
    double width = 1.0;          // N^{-theta}
    double scale = 1.0;          // N^{theta}
    double normalization = base_mollifier::kNorm;

    double radial_value(double r) const {
        return scale * scale * scale * base_mollifier::value(scale * r);
    }
    double antider_u(double x) const {  // int_0^x u chi^N(u) du
        return scale * base_mollifier::antider_u(scale * x);
    }
};

inline MollifierProfile build_mollifier(const RegularizationParams& p) {
    p.validate();
    MollifierProfile m;
    m.theta = p.theta;
    m.n = p.n_particles;
    m.scale = std::pow(static_cast<double>(p.n_particles), p.theta);
    m.width = 1.0 / m.scale;
    return m;
}

// Radial table of eta^N = chi^N * chi^N on [0, 2 N^{-theta}], C1 cubic-Hermite
// interpolated, together with the cumulative moments used everywhere else:
//   P(x) = int_0^x u eta,   mass M(x) = 4 pi int_0^x u^2 eta,   T(x) = int_0^x u^3 eta.
class DoubleMollifierTable {
  public:
    DoubleMollifierTable(const MollifierProfile& m, std::size_t intervals = 1024)
        : width_(m.width), support_(2.0 * m.width), h_(support_ / static_cast<double>(intervals)) {
        std::size_t n = intervals + 1;
        val_.resize(n);
        der_.resize(n);
        cum_p_.resize(n);
        cum_m_.resize(n);
        cum_t_.resize(n);

        for (std::size_t k = 0; k < n; ++k) {
            double r = static_cast<double>(k) * h_;
            val_[k] = eta_exact(m, r);
            der_[k] = eta_prime_exact(m, r);
        }
        // Cumulative moments by 16-node Gauss per interval against the exact
        // integrand; eta is piecewise polynomial so each panel is quadrature-exact.
        cum_p_[0] = cum_m_[0] = cum_t_[0] = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            double a = static_cast<double>(k - 1) * h_;
            double b = static_cast<double>(k) * h_;
            cum_p_[k] = cum_p_[k - 1] +
                        gauss_fixed<16>([&](double u) { return u * eta_exact(m, u); }, a, b);
            cum_m_[k] = cum_m_[k - 1] +
                        gauss_fixed<16>([&](double u) { return kFourPi * u * u * eta_exact(m, u); }, a, b);
            cum_t_[k] = cum_t_[k - 1] +
                        gauss_fixed<16>([&](double u) { return u * u * u * eta_exact(m, u); }, a, b);
        }
        double mass_residual = std::abs(cum_m_.back() - 1.0);
        if (mass_residual > 1e-10)
            throw ToleranceError("double-mollifier mass quadrature residual " +
                                 std::to_string(mass_residual));
    }

    double width() const { return width_; }            // N^{-theta}
    double support_radius() const { return support_; } // 2 N^{-theta}
    double grid_step() const { return h_; }
    std::size_t nodes() const { return val_.size(); }
    double node_value(std::size_t k) const { return val_[k]; }

    double value(double u) const {
        if (u >= support_ || u < 0.0) return 0.0;
        return hermite(val_, der_, u);
    }
    double derivative(double u) const {
        if (u >= support_ || u < 0.0) return 0.0;
        // Catmull-Rom slope estimate for eta'' keeps eta' C1 without storing it.
        return hermite(der_, {}, u);
    }
    double cum_u(double x) const { return cum_eval(cum_p_, val_, 1, x); }
    double mass(double x) const { return cum_eval(cum_m_, val_, 2, x); }
    double cum_u3(double x) const { return cum_eval(cum_t_, val_, 3, x); }

    double total_cum_u() const { return cum_p_.back(); }
    double total_cum_u3() const { return cum_t_.back(); }

  private:
    // eta(r) = (2 pi / r) int_0^w s chi^N(s) [Q(r+s) - Q(|r-s|)] ds, split at the
    // kinks so each fixed Gauss panel integrates a polynomial exactly.
    static double eta_exact(const MollifierProfile& m, double r) {
        double w = m.width;
        if (r >= 2.0 * w) return 0.0;
        if (r < 1e-7 * w) {
            // eta(0) = int chi^2 = 4 pi int_0^w chi^N(s)^2 s^2 ds
            return gauss_fixed<32>(
                [&](double s) {
                    double c = m.radial_value(s);
                    return kFourPi * c * c * s * s;
                },
                0.0, w);
        }
        auto integrand = [&](double s) {
            return s * m.radial_value(s) * (m.antider_u(r + s) - m.antider_u(std::abs(r - s)));
        };
        double total = 0.0;
        for (auto [a, b] : split_panels(r, w))
            total += gauss_fixed<24>(integrand, a, b);
        return 2.0 * kPi / r * total;
    }

    static double eta_prime_exact(const MollifierProfile& m, double r) {
        double w = m.width;
        if (r >= 2.0 * w || r < 1e-7 * w) return 0.0;
        auto integrand = [&](double s) {
            return s * m.radial_value(s) *
                   ((r + s) * m.radial_value(r + s) - (r - s) * m.radial_value(std::abs(r - s)));
        };
        double total = 0.0;
        for (auto [a, b] : split_panels(r, w))
            total += gauss_fixed<24>(integrand, a, b);
        return -eta_exact(m, r) / r + 2.0 * kPi / r * total;
    }

    static std::vector<std::pair<double, double>> split_panels(double r, double w) {
        std::vector<double> cuts{0.0, w};
        for (double c : {r, w - r, r - w})
            if (c > 0.0 && c < w) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        std::vector<std::pair<double, double>> panels;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            if (cuts[i + 1] > cuts[i]) panels.emplace_back(cuts[i], cuts[i + 1]);
        return panels;
    }

    // Cubic Hermite on the uniform grid. When derivative nodes are absent a
    // Catmull-Rom slope is used.
    double hermite(const std::vector<double>& v, const std::vector<double>& d, double u) const {
        double pos = u / h_;
        std::size_t k = std::min(static_cast<std::size_t>(pos), v.size() - 2);
        double t = pos - static_cast<double>(k);
        double v0 = v[k], v1 = v[k + 1];
        double d0, d1;
        if (!d.empty()) {
            d0 = d[k] * h_;
            d1 = d[k + 1] * h_;
        } else {
            d0 = (k == 0) ? (v[1] - v[0]) : 0.5 * (v[k + 1] - v[k - 1]);
            d1 = (k + 2 >= v.size()) ? (v[k + 1] - v[k]) : 0.5 * (v[k + 2] - v[k]);
        }
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * d0 +
               (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * d1;
    }

    double cum_eval(const std::vector<double>& cum, const std::vector<double>& v, int pw,
                    double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= support_) return cum.back();
        double pos = x / h_;
        std::size_t k = std::min(static_cast<std::size_t>(pos), cum.size() - 2);
        double t = pos - static_cast<double>(k);
        double u0 = static_cast<double>(k) * h_, u1 = u0 + h_;
        auto g = [&](double u, double ev) {
            double f = ev * u;
            if (pw >= 2) f *= u;
            if (pw >= 3) f *= u;
            return pw == 2 ? kFourPi * f : f;
        };
        double d0 = g(u0, v[k]) * h_, d1 = g(u1, v[k + 1]) * h_;
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * cum[k] + (t3 - 2 * t2 + t) * d0 +
               (-2 * t3 + 3 * t2) * cum[k + 1] + (t3 - t2) * d1;
    }

    double width_, support_, h_;
    std::vector<double> val_, der_, cum_p_, cum_m_, cum_t_;
};

inline std::shared_ptr<const DoubleMollifierTable> build_double_mollifier(
    const MollifierProfile& m) {
    return std::make_shared<const DoubleMollifierTable>(m);
}

// Magnitude of (x/(4 pi |x|^3)) * eta^N at |x| = r. Shell theorem: enclosed
// mollifier mass over 4 pi r^2; exactly Coulomb for r >= 2 N^{-theta}.
inline double mollified_coulomb_field(double r, const DoubleMollifierTable& eta) {
    if (r <= 0.0) return 0.0;
    if (r >= eta.support_radius()) return 1.0 / (kFourPi * r * r);
    return eta.mass(r) / (kFourPi * r * r);
}

// Mass of the eta^N ball centered at distance s from the origin that lies
// inside the origin-centered ball of radius r. Closed form in the cumulative
// moments; exact 0/1 outside the smearing band |r - s| >= 2 N^{-theta}.
inline double ball_overlap_mass(double r, double s, const DoubleMollifierTable& eta) {
    double w2 = eta.support_radius();
    if (r <= 0.0) return 0.0;
    if (s <= 1e-12 * w2) return r >= w2 ? 1.0 : eta.mass(r);
    double a = std::abs(r - s);
    if (a >= w2) return r > s ? 1.0 : 0.0;
    double b = std::min(r + s, w2);
    double inner = (s < r) ? eta.mass(a) : 0.0;
    double dm = eta.mass(b) - eta.mass(a);
    double dp = eta.cum_u(b) - eta.cum_u(a);
    double dt = eta.cum_u3(b) - eta.cum_u3(a);
    return inner + 0.5 * dm - kPi / s * ((s * s - r * r) * dp + dt);
}

}  // namespace vmlab
