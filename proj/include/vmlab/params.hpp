#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vmlab/errors.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab {

// Regularization knobs: particle count N, mollifier exponent theta, light speed c.
// The mollifier width is always recomputed as N^{-theta}, never stored separately.
struct RegularizationParams {
    int n_particles = 2;
    double theta = 0.1;
    double light_speed = 4.0;

    double mollifier_width() const { return std::pow(static_cast<double>(n_particles), -theta); }

    void validate() const {
        if (n_particles < 1) throw ConstraintError("n_particles must be >= 1");
        if (!(theta > 0.0) || !std::isfinite(theta))
            throw ConstraintError("theta must be positive and finite");
        if (!(light_speed >= 1.0))
            throw ConstraintError("light_speed must satisfy c >= 1");
    }
};

// Scaling exponents (alpha, beta, gamma, theta, eta). gamma defaults to beta:
// the force-fluctuation bound for the magnetic channel reuses the beta-style rate.
struct ExponentSet {
    double alpha = 0.1;
    double beta = 0.2;
    double gamma = 0.2;
    double theta = 0.005;
    double eta = 0.004;
};

struct ValidationResult {
    bool ok = true;
    std::vector<std::string> violations;
};

// Open-interval admissibility:
//   alpha in (0, 1/8), beta in (alpha, (1-alpha)/4),
//   theta in (0, (1-alpha-4 beta)/16), eta in (0, (1-alpha-4 beta-16 theta)/4).
// Endpoints are rejected. In non-strict mode the violations come back as warnings
// so desk-scale experiments can run with exponents the asymptotic theory would
// not admit.
inline ValidationResult validate_exponents(const ExponentSet& e, bool strict) {
    ValidationResult res;
    auto fail = [&](const std::string& what) {
        res.ok = false;
        res.violations.push_back(what);
    };
    for (double v : {e.alpha, e.beta, e.gamma, e.theta, e.eta})
        if (!std::isfinite(v)) throw ConstraintError("exponents must all be finite");

    if (!(e.alpha > 0.0)) fail("alpha <= 0");
    if (!(e.alpha < 0.125)) fail("alpha >= 1/8");
    if (!(e.beta > e.alpha)) fail("beta <= alpha");
    double beta_hi = (1.0 - e.alpha) / 4.0;
    if (!(e.beta < beta_hi)) fail("beta >= (1-alpha)/4 = " + std::to_string(beta_hi));
    double theta_hi = (1.0 - e.alpha - 4.0 * e.beta) / 16.0;
    if (!(e.theta > 0.0)) fail("theta <= 0");
    if (!(e.theta < theta_hi)) fail("theta >= (1-alpha-4beta)/16 = " + std::to_string(theta_hi));
    double gamma_hi = beta_hi;
    if (!(e.gamma > e.alpha)) fail("gamma <= alpha");
    if (!(e.gamma < gamma_hi)) fail("gamma >= (1-alpha)/4 = " + std::to_string(gamma_hi));
    double eta_hi = (1.0 - e.alpha - 4.0 * e.beta - 16.0 * e.theta) / 4.0;
    if (!(e.eta > 0.0)) fail("eta <= 0");
    if (!(e.eta < eta_hi))
        fail("eta >= (1-alpha-4beta-16theta)/4 = " + std::to_string(eta_hi));

    if (strict && !res.ok) {
        std::string all;
        for (const auto& v : res.violations) all += (all.empty() ? "" : "; ") + v;
        throw ConstraintError("exponent constraints violated: " + all);
    }
    return res;
}

// Relativistic transport velocity v / sqrt(1 + |v|^2/c^2); |result| < c for all finite v.
inline Vec3 hat_velocity(const Vec3& v, double c) {
    return v / std::sqrt(1.0 + v.norm2() / (c * c));
}

// Inverse of hat_velocity on |u| < c; used to prescribe test trajectories with a
// given coordinate velocity.
inline Vec3 inverse_hat_velocity(const Vec3& u, double c) {
    double q = 1.0 - u.norm2() / (c * c);
    if (!(q > 0.0)) throw ConstraintError("inverse_hat_velocity requires |u| < c");
    return u / std::sqrt(q);
}

}  // namespace vmlab
