#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "vmlab/forces.hpp"
#include "vmlab/history.hpp"
#include "vmlab/initial_data.hpp"
#include "vmlab/threads.hpp"
#include "vmlab/wave_kernel.hpp"

namespace vmlab {

struct ParticleEnsemble {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    double time = 0.0;

    std::size_t size() const { return positions.size(); }
};

inline ParticleEnsemble ensemble_from_samples(const std::vector<Sample>& s) {
    ParticleEnsemble e;
    e.positions.reserve(s.size());
    e.velocities.reserve(s.size());
    for (const auto& p : s) {
        e.positions.push_back(p.x);
        e.velocities.push_back(p.v);
    }
    return e;
}

struct MaxwellSettings {
    bool enable_pair_forces = true;
    bool enable_gamma = true;
    double quad_rel_tol = 1e-6;
    int threads = 1;
    double cfl_kappa = 0.25;  // dt <= kappa * N^{-theta} / c
};

// Regularized Vlasov-Maxwell N-particle system: retarded pair forces F1 + F2
// with 1/(N-1) coupling plus the self-driven force, advanced by Heun steps.
// Trajectory histories provide the dense output the retarded integrals need.
class MaxwellSystem {
  public:
    MaxwellSystem(const RegularizationParams& params, std::shared_ptr<const InitialFields> fields,
                  const ParticleEnsemble& initial, double dt, MaxwellSettings settings = {})
        : params_(params), kernel_(params, build_double_mollifier(build_mollifier(params))),
          fields_(std::move(fields)), ens_(initial), dt_(dt), settings_(settings) {
        params_.validate();
        double dt_max = settings_.cfl_kappa * params_.mollifier_width() / params_.light_speed;
        if (dt > dt_max)
            throw ConfigError("dt " + std::to_string(dt) + " violates the shell-resolution rule dt <= " +
                              std::to_string(dt_max));
        if (ens_.size() == 0) throw ConfigError("Maxwell system needs at least one particle");
        spatial_bound_ = 0.0;
        for (const auto& x : ens_.positions) spatial_bound_ = std::max(spatial_bound_, x.norm());
        initial_radius_ = spatial_bound_;

        hist_.reserve(ens_.size());
        auto a0 = accelerations(0.0, ens_.positions, ens_.velocities, /*histories_ready=*/false);
        for (std::size_t i = 0; i < ens_.size(); ++i) {
            hist_.emplace_back(dt_, params_.light_speed);
            hist_[i].append(0.0, ens_.positions[i], ens_.velocities[i], a0[i]);
        }
    }

    const ParticleEnsemble& ensemble() const { return ens_; }
    const std::vector<TrajectoryHistory>& histories() const { return hist_; }
    const SmoothedWaveKernel& kernel() const { return kernel_; }
    const InitialFields* initial_fields() const { return fields_.get(); }
    double time() const { return ens_.time; }
    double dt() const { return dt_; }

    // One explicit trapezoidal (Heun) step. Stage two sees a provisional history
    // record at t + dt so retarded windows that reach into the fresh interval
    // interpolate against the predictor segment.
    void step() {
        double t = ens_.time;
        std::size_t n = ens_.size();
        auto a1 = accelerations(t, ens_.positions, ens_.velocities, true);

        std::vector<Vec3> xp(n), vp(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 vh = hat_velocity(ens_.velocities[i], params_.light_speed);
            xp[i] = ens_.positions[i] + vh * dt_;
            vp[i] = ens_.velocities[i] + a1[i] * dt_;
        }
        for (std::size_t i = 0; i < n; ++i) hist_[i].append(t + dt_, xp[i], vp[i], a1[i]);

        auto a2 = accelerations(t + dt_, xp, vp, true);

        for (std::size_t i = 0; i < n; ++i) {
            Vec3 vh0 = hat_velocity(ens_.velocities[i], params_.light_speed);
            Vec3 vh1 = hat_velocity(vp[i], params_.light_speed);
            ens_.positions[i] += (vh0 + vh1) * (0.5 * dt_);
            ens_.velocities[i] += (a1[i] + a2[i]) * (0.5 * dt_);
            hist_[i].replace_last(t + dt_, ens_.positions[i], ens_.velocities[i], a2[i]);
        }
        ens_.time = t + dt_;

        double bound = initial_radius_ + params_.light_speed * ens_.time + 1e-9;
        for (const auto& x : ens_.positions) {
            spatial_bound_ = std::max(spatial_bound_, x.norm());
            if (x.norm() > bound)
                throw NumericalError("particle escaped the finite-propagation bound |x| <= p0 + c t");
        }
        evict_stale_history();
    }

    void run_until(double t_end) {
        while (ens_.time < t_end - 0.5 * dt_) step();
    }

    // Total force field at a probe (used by the mean-field diagnostics): the
    // 1/(N-1)-weighted sums are replaced by a 1/M average over the cloud.
    Vec3 mean_field_f1(const Vec3& x, double t, double rel_tol = 1e-6) const {
        Vec3 sum{};
        for (const auto& h : hist_) sum += pair_force_f1(x, t, h, kernel_, rel_tol);
        return sum / static_cast<double>(hist_.size());
    }
    Vec3 mean_field_f2(const Vec3& x, const Vec3& v, double t, double rel_tol = 1e-6) const {
        Vec3 sum{};
        for (const auto& h : hist_) sum += pair_force_f2(x, v, t, h, kernel_, rel_tol);
        return sum / static_cast<double>(hist_.size());
    }

  private:
    std::vector<Vec3> accelerations(double t, const std::vector<Vec3>& xs,
                                    const std::vector<Vec3>& vs, bool histories_ready) const {
        std::size_t n = xs.size();
        std::vector<Vec3> acc(n);
        double weight = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
        parallel_for(
            n,
            [&](std::size_t i) {
                Vec3 a{};
                if (settings_.enable_gamma && fields_)
                    a += self_force_gamma(xs[i], t, *fields_, kernel_);
                if (settings_.enable_pair_forces && histories_ready && n > 1) {
                    Vec3 pair{};
                    // fixed ascending-j order keeps the reduction bit-stable
                    // across thread counts
                    for (std::size_t j = 0; j < n; ++j) {
                        if (j == i) continue;
                        pair += pair_force_f1(xs[i], t, hist_[j], kernel_, settings_.quad_rel_tol);
                        pair += pair_force_f2(xs[i], vs[i], t, hist_[j], kernel_,
                                              settings_.quad_rel_tol);
                    }
                    a += pair * weight;
                }
                acc[i] = a;
            },
            settings_.threads);
        return acc;
    }

    void evict_stale_history() {
        double reach = (2.0 * spatial_bound_ + 2.0 * kernel_.shell_half_width()) /
                       params_.light_speed;
        double t_min = ens_.time - reach - 8.0 * dt_;
        if (t_min <= 0.0) return;
        for (auto& h : hist_) h.evict_before(t_min);
    }

    RegularizationParams params_;
    SmoothedWaveKernel kernel_;
    std::shared_ptr<const InitialFields> fields_;
    ParticleEnsemble ens_;
    double dt_;
    MaxwellSettings settings_;
    std::vector<TrajectoryHistory> hist_;
    double spatial_bound_ = 0.0;
    double initial_radius_ = 0.0;
};

}  // namespace vmlab
