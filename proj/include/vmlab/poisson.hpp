#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "vmlab/errors.hpp"
#include "vmlab/history.hpp"
#include "vmlab/maxwell.hpp"
#include "vmlab/mollifier.hpp"
#include "vmlab/threads.hpp"

namespace vmlab {

enum class PoissonFieldMode { RadialShell, DirectSum };

// Snapshot evaluator of the doubly mollified mean-field Coulomb field generated
// by a particle cloud.
//
// Radial-shell mode projects the empirical measure onto its radial marginal
// (exact for the radially symmetric default law, and it quotients out angular
// sampling noise): field = enclosed mass / (4 pi r^2), where particles within
// 2 N^{-theta} of the query radius contribute their exact mollified-shell
// overlap. Direct summation of mollified pair kernels is the slow oracle and
// the non-radial fallback.
class CloudFieldEval {
  public:
    CloudFieldEval(const std::vector<Vec3>& positions, PoissonFieldMode mode,
                   std::shared_ptr<const DoubleMollifierTable> eta)
        : mode_(mode), eta_(std::move(eta)), m_(positions.size()) {
        if (positions.empty()) throw ConfigError("cloud field requires a nonempty cloud");
        if (mode_ == PoissonFieldMode::RadialShell) {
            radii_.reserve(m_);
            for (const auto& x : positions) radii_.push_back(x.norm());
            std::sort(radii_.begin(), radii_.end());
        } else {
            pos_ = positions;
        }
    }

    Vec3 operator()(const Vec3& x) const {
        if (mode_ == PoissonFieldMode::RadialShell) {
            double r = x.norm();
            if (r <= 0.0) return {};
            double w2 = eta_->support_radius();
            auto lo = std::lower_bound(radii_.begin(), radii_.end(), r - w2);
            double mass = static_cast<double>(lo - radii_.begin());
            for (auto it = lo; it != radii_.end() && *it < r + w2; ++it)
                mass += ball_overlap_mass(r, *it, *eta_);
            double mag = mass / static_cast<double>(m_) / (kFourPi * r * r);
            return x * (mag / r);
        }
        Vec3 sum{};
        for (const auto& y : pos_) {
            Vec3 d = x - y;
            double r = d.norm();
            if (r <= 0.0) continue;
            sum += d * (mollified_coulomb_field(r, *eta_) / r);
        }
        return sum / static_cast<double>(m_);
    }

  private:
    PoissonFieldMode mode_;
    std::shared_ptr<const DoubleMollifierTable> eta_;
    std::size_t m_;
    std::vector<double> radii_;
    std::vector<Vec3> pos_;
};

// Spec-level field query: rebuilds the snapshot per call; the stepper below
// reuses one snapshot per stage instead.
inline Vec3 poisson_field(const std::vector<Vec3>& cloud, const Vec3& x, PoissonFieldMode mode,
                          std::shared_ptr<const DoubleMollifierTable> eta) {
    return CloudFieldEval(cloud, mode, std::move(eta))(x);
}

struct PoissonFlowState {
    std::vector<Vec3> cloud_x, cloud_v;
    std::vector<Vec3> test_x, test_v;
    double time = 0.0;
};

// One Heun step of the non-relativistic mean-field characteristics
//   dx/dt = v (plain velocity, not vhat),  dv/dt = E(t, x),
// where the field of each stage comes from make_field(cloud positions): the
// cloud advances self-consistently, the test ensemble is driven by it.
template <class FieldFactory>
void poisson_step_generic(PoissonFlowState& st, double dt, const FieldFactory& make_field,
                          int threads = 1) {
    std::size_t mc = st.cloud_x.size(), nt = st.test_x.size();
    auto field1 = make_field(st.cloud_x);
    std::vector<Vec3> ac1(mc), at1(nt);
    parallel_for(mc, [&](std::size_t i) { ac1[i] = field1(st.cloud_x[i]); }, threads);
    parallel_for(nt, [&](std::size_t i) { at1[i] = field1(st.test_x[i]); }, threads);

    std::vector<Vec3> cxp(mc), cvp(mc), txp(nt), tvp(nt);
    for (std::size_t i = 0; i < mc; ++i) {
        cxp[i] = st.cloud_x[i] + st.cloud_v[i] * dt;
        cvp[i] = st.cloud_v[i] + ac1[i] * dt;
    }
    for (std::size_t i = 0; i < nt; ++i) {
        txp[i] = st.test_x[i] + st.test_v[i] * dt;
        tvp[i] = st.test_v[i] + at1[i] * dt;
    }

    auto field2 = make_field(cxp);
    std::vector<Vec3> ac2(mc), at2(nt);
    parallel_for(mc, [&](std::size_t i) { ac2[i] = field2(cxp[i]); }, threads);
    parallel_for(nt, [&](std::size_t i) { at2[i] = field2(txp[i]); }, threads);

    for (std::size_t i = 0; i < mc; ++i) {
        st.cloud_x[i] += (st.cloud_v[i] + cvp[i]) * (0.5 * dt);
        st.cloud_v[i] += (ac1[i] + ac2[i]) * (0.5 * dt);
    }
    for (std::size_t i = 0; i < nt; ++i) {
        st.test_x[i] += (st.test_v[i] + tvp[i]) * (0.5 * dt);
        st.test_v[i] += (at1[i] + at2[i]) * (0.5 * dt);
    }
    st.time += dt;
}

struct PoissonSettings {
    PoissonFieldMode mode = PoissonFieldMode::RadialShell;
    bool radial_family = true;  // the default initial law; plug-ins must say otherwise
    bool disable_field = false;
    int threads = 1;
};

// McKean-Vlasov particle representation of the mollified Vlasov-Poisson flow:
// a reference cloud of M >= N samples carries the law, the N coupled test
// characteristics ride its field.
class PoissonFlow {
  public:
    PoissonFlow(const std::vector<Sample>& cloud, const ParticleEnsemble& tests,
                std::shared_ptr<const DoubleMollifierTable> eta, double dt,
                PoissonSettings settings = {})
        : eta_(std::move(eta)), dt_(dt), settings_(settings) {
        if (cloud.size() < tests.size())
            throw ConfigError("mean-field cloud must hold at least as many samples as the "
                              "coupled ensemble (M >= N)");
        if (settings_.mode == PoissonFieldMode::RadialShell && !settings_.radial_family)
            throw UnsupportedError("radial-shell field mode requires the radial default "
                                   "initial-data family");
        st_.cloud_x.reserve(cloud.size());
        st_.cloud_v.reserve(cloud.size());
        for (const auto& s : cloud) {
            st_.cloud_x.push_back(s.x);
            st_.cloud_v.push_back(s.v);
        }
        st_.test_x = tests.positions;
        st_.test_v = tests.velocities;
    }

    void step() {
        auto factory = [&](const std::vector<Vec3>& xs) {
            if (settings_.disable_field) return std::function<Vec3(const Vec3&)>([](const Vec3&) {
                return Vec3{};
            });
            CloudFieldEval eval(xs, settings_.mode, eta_);
            return std::function<Vec3(const Vec3&)>(eval);
        };
        poisson_step_generic(st_, dt_, factory, settings_.threads);
    }

    void run_until(double t_end) {
        while (st_.time < t_end - 0.5 * dt_) step();
    }

    const PoissonFlowState& state() const { return st_; }
    double time() const { return st_.time; }
    Vec3 field_at(const Vec3& x) const {
        return poisson_field(st_.cloud_x, x, settings_.mode, eta_);
    }

  private:
    std::shared_ptr<const DoubleMollifierTable> eta_;
    double dt_;
    PoissonSettings settings_;
    PoissonFlowState st_;
};

struct MeanFieldForces {
    Vec3 f1, f2;
};

// Mean-field Maxwell force at an external query point: the retarded pair-force
// machinery aimed at (x, v) with the empirical 1/M average over cloud histories.
inline MeanFieldForces maxwell_meanfield_force(const std::vector<TrajectoryHistory>& histories,
                                               const Vec3& x, const Vec3& v, double t,
                                               const SmoothedWaveKernel& kernel,
                                               double rel_tol = 1e-6) {
    if (histories.empty()) throw ConfigError("mean-field force requires cloud histories");
    MeanFieldForces out;
    for (const auto& h : histories) {
        out.f1 += pair_force_f1(x, t, h, kernel, rel_tol);
        out.f2 += pair_force_f2(x, v, t, h, kernel, rel_tol);
    }
    double inv = 1.0 / static_cast<double>(histories.size());
    out.f1 *= inv;
    out.f2 *= inv;
    return out;
}

}  // namespace vmlab
