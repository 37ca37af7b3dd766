#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vmlab/initial_data.hpp"
#include "vmlab/maxwell.hpp"
#include "vmlab/poisson.hpp"
#include "vmlab/quadrature.hpp"
#include "vmlab/rng.hpp"
#include "vmlab/threads.hpp"

namespace vmlab {

// Wilson score interval at z = 1.96.
struct WilsonInterval {
    double p_hat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double z = 1.96) {
    WilsonInterval w;
    if (trials == 0) return w;
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    w.p_hat = p;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

// Parameters of one coupled trial: both flows share the same initial ensemble
// and the same time grid.
struct TrialConfig {
    RegularizationParams regularization;
    InitialDensity initial_density;
    double alpha = 0.3;
    double horizon = 1.0;
    double dt = 0.0;            // 0 = derive from the CFL rule, rounded to divide T
    std::size_t cloud_size = 512;
    int threads = 1;
    double quad_rel_tol = 1e-6;
    // test toggles; production configs leave all three on
    bool enable_pair_forces = true;
    bool enable_gamma = true;
    bool enable_poisson_field = true;
};

inline double resolve_trial_dt(const TrialConfig& cfg) {
    if (cfg.dt > 0.0) return cfg.dt;
    double dt_max = 0.25 * cfg.regularization.mollifier_width() / cfg.regularization.light_speed;
    auto steps = static_cast<std::size_t>(std::ceil(cfg.horizon / dt_max - 1e-12));
    steps = std::max<std::size_t>(steps, 1);
    return cfg.horizon / static_cast<double>(steps);
}

// One Monte Carlo realization: shared initial data, the Maxwell particle flow
// against the Poisson mean-field flow, and the running deviation
//   d(t) = sup_{s<=t} |(X_m, V_m)(s) - (X_p, V_p)(s)|_inf,
//   S_t  = min(1, N^alpha d(t)).
struct CoupledTrial {
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> deviation;  // running sup d(t)
    std::vector<double> s_process;  // S_t
    double final_deviation = 0.0;
    double final_s = 0.0;
    bool exceeded = false;  // d(T) > N^{-alpha}
    double threshold = 0.0;
    double m_bias = 0.0;  // cloud field error at t = 0 probes vs the exact law
};

inline CoupledTrial run_coupled_trial(const TrialConfig& cfg, std::uint64_t seed) {
    cfg.regularization.validate();
    cfg.initial_density.validate();
    double dt = resolve_trial_dt(cfg);
    std::size_t n = static_cast<std::size_t>(cfg.regularization.n_particles);

    RngStream trial_stream = RngStream(seed);
    auto shared = sample_ensemble(cfg.initial_density, n,
                                  trial_stream.child(rng_label::kEnsemble).key());
    auto cloud = sample_ensemble(cfg.initial_density, cfg.cloud_size,
                                 trial_stream.child(rng_label::kCloud).key());

    auto eta = build_double_mollifier(build_mollifier(cfg.regularization));
    auto fields = std::make_shared<InitialFields>(cfg.initial_density, eta);
    ParticleEnsemble init = ensemble_from_samples(shared);

    MaxwellSettings ms;
    ms.enable_pair_forces = cfg.enable_pair_forces;
    ms.enable_gamma = cfg.enable_gamma;
    ms.threads = cfg.threads;
    ms.quad_rel_tol = cfg.quad_rel_tol;
    MaxwellSystem maxwell(cfg.regularization, cfg.enable_gamma ? fields : nullptr, init, dt, ms);

    PoissonSettings ps;
    ps.threads = cfg.threads;
    ps.disable_field = !cfg.enable_poisson_field;
    PoissonFlow poisson(cloud, init, eta, dt, ps);

    CoupledTrial out;
    out.seed = seed;
    out.threshold = std::pow(static_cast<double>(n), -cfg.alpha);
    double n_alpha = std::pow(static_cast<double>(n), cfg.alpha);

    // cloud-size bias diagnostic: compare the t = 0 cloud field against the
    // exact mollified field of rho0 at a few probe radii
    {
        double r0 = cfg.initial_density.spatial_radius;
        double worst = 0.0;
        for (double r : {0.5 * r0, r0, 1.5 * r0}) {
            double exact = fields->field(r);
            Vec3 got = poisson.field_at({r, 0.0, 0.0});
            worst = std::max(worst, std::abs(got.x - exact) / std::max(exact, 1e-300));
        }
        out.m_bias = worst;
    }

    double running = 0.0;
    auto record = [&](double t) {
        const auto& mx = maxwell.ensemble();
        const auto& px = poisson.state();
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d = std::max(d, (mx.positions[i] - px.test_x[i]).norm_inf());
            d = std::max(d, (mx.velocities[i] - px.test_v[i]).norm_inf());
        }
        running = std::max(running, d);
        double s = std::min(1.0, n_alpha * running);
        // pathwise invariants of the deviation process
        if (!out.s_process.empty() && s + 1e-15 < out.s_process.back())
            throw InternalError("S_t lost monotonicity");
        if ((running > out.threshold) != (s >= 1.0 - 1e-15))
            throw InternalError("S_t = 1 must coincide with the exceedance event");
        out.times.push_back(t);
        out.deviation.push_back(running);
        out.s_process.push_back(s);
    };

    record(0.0);
    auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / dt));
    for (std::size_t k = 0; k < steps; ++k) {
        maxwell.step();
        poisson.step();
        record(maxwell.time());
    }

    out.final_deviation = out.deviation.back();
    out.final_s = out.s_process.back();
    out.exceeded = out.final_deviation > out.threshold;
    return out;
}

// One rung of the (N, c) ladder.
struct RungSpec {
    int n_particles = 16;
    double light_speed = 4.0;
    double theta = 0.15;
};

struct RungResult {
    RungSpec spec;
    double dt = 0.0;
    std::size_t trials = 0;
    std::size_t aborted = 0;
    std::size_t exceed_count = 0;
    WilsonInterval exceedance;
    double mean_s = 0.0;
    double se_s = 0.0;
    double threshold = 0.0;
    double mean_m_bias = 0.0;
    bool markov_consistent = false;  // p_hat <= mean(S_T) + 3 SE
    std::vector<std::string> abort_messages;
};

struct ExceedanceReport {
    std::vector<RungResult> rungs;
    SlopeFit slope;                // log p_hat vs log N over rungs with p_hat > 0
    int hard_trend_violations = 0; // increase with disjoint Wilson intervals
    int soft_trend_violations = 0; // increase with overlapping intervals
    bool strict_exponents = false;
    double wall_seconds = 0.0;
};

using TrialRunner = std::function<CoupledTrial(const TrialConfig&, std::uint64_t)>;

// Ladder estimator: independent per-trial seeds derived from (master, rung,
// trial); trials run in parallel, the fold over results is by trial index.
// Aborted trials are counted and reported, never retried or dropped silently.
inline ExceedanceReport estimate_exceedance(
    const TrialConfig& base, const std::vector<RungSpec>& ladder, std::size_t trials,
    std::uint64_t master_seed, int threads = 1,
    const TrialRunner& runner = &run_coupled_trial) {
    ExceedanceReport report;
    RngStream master(master_seed);

    for (std::size_t rung_idx = 0; rung_idx < ladder.size(); ++rung_idx) {
        const auto& rung = ladder[rung_idx];
        TrialConfig cfg = base;
        cfg.regularization.n_particles = rung.n_particles;
        cfg.regularization.light_speed = rung.light_speed;
        cfg.regularization.theta = rung.theta;
        cfg.cloud_size = std::max(cfg.cloud_size,
                                  static_cast<std::size_t>(rung.n_particles));

        RngStream rung_stream = master.child(rng_label::kRung).child(rung_idx);

        struct Slot {
            bool ok = false;
            CoupledTrial trial;
            std::string error;
        };
        std::vector<Slot> slots(trials);
        std::vector<std::uint64_t> seeds(trials);
        for (std::size_t k = 0; k < trials; ++k)
            seeds[k] = rung_stream.child(rng_label::kTrial).child(k).key();

        parallel_for(
            trials,
            [&](std::size_t k) {
                try {
                    slots[k].trial = runner(cfg, seeds[k]);
                    slots[k].ok = true;
                } catch (const std::exception& ex) {
                    slots[k].error = ex.what();
                }
            },
            threads);

        RungResult rr;
        rr.spec = rung;
        rr.dt = resolve_trial_dt(cfg);
        rr.threshold = std::pow(static_cast<double>(rung.n_particles), -cfg.alpha);
        double sum_s = 0.0, sum_s2 = 0.0, sum_bias = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            if (!slots[k].ok) {
                ++rr.aborted;
                rr.abort_messages.push_back(slots[k].error);
                continue;
            }
            const auto& tr = slots[k].trial;
            ++rr.trials;
            if (tr.exceeded) ++rr.exceed_count;
            sum_s += tr.final_s;
            sum_s2 += tr.final_s * tr.final_s;
            sum_bias += tr.m_bias;
        }
        if (rr.trials > 0) {
            double nn = static_cast<double>(rr.trials);
            rr.exceedance = wilson_interval(rr.exceed_count, rr.trials);
            rr.mean_s = sum_s / nn;
            rr.se_s = rr.trials > 1
                          ? std::sqrt(std::max(0.0, (sum_s2 / nn - rr.mean_s * rr.mean_s)) /
                                      (nn - 1.0))
                          : 0.0;
            rr.mean_m_bias = sum_bias / nn;
            rr.markov_consistent = rr.exceedance.p_hat <= rr.mean_s + 3.0 * rr.se_s + 1e-12;
        }
        report.rungs.push_back(std::move(rr));
    }

    std::vector<double> ns, ps;
    for (const auto& r : report.rungs) {
        if (r.trials > 0 && r.exceedance.p_hat > 0.0) {
            ns.push_back(static_cast<double>(r.spec.n_particles));
            ps.push_back(r.exceedance.p_hat);
        }
    }
    report.slope = fit_loglog_slope(ns, ps);

    for (std::size_t k = 0; k + 1 < report.rungs.size(); ++k) {
        const auto& a = report.rungs[k];
        const auto& b = report.rungs[k + 1];
        if (a.trials == 0 || b.trials == 0) continue;
        if (b.exceedance.p_hat > a.exceedance.p_hat) {
            bool overlap = b.exceedance.lo <= a.exceedance.hi;
            (overlap ? report.soft_trend_violations : report.hard_trend_violations)++;
        }
    }
    return report;
}

// Fourth-moment scaling of the centered pair-force average (static snapshot):
// draws N-1 i.i.d. source positions, projects the force fluctuation at a fixed
// probe onto the radial direction and averages; the fourth moment of that mean
// is expected to fall like N^{-2}.
struct FluctuationReport {
    std::vector<double> ns;
    std::vector<double> fourth_moments;
    SlopeFit fit;
};

template <class SampleH>
FluctuationReport fluctuation_fourth_moment(const std::vector<int>& n_ladder,
                                            std::size_t resamples, std::uint64_t seed,
                                            const SampleH& h_of_stream) {
    FluctuationReport rep;
    RngStream root(seed);
    for (std::size_t li = 0; li < n_ladder.size(); ++li) {
        int n = n_ladder[li];
        double acc = 0.0;
        RngStream rung = root.child(rng_label::kRung).child(li);
        for (std::size_t rep_i = 0; rep_i < resamples; ++rep_i) {
            RngStream rs = rung.child(rng_label::kResample).child(rep_i);
            double sum = 0.0;
            for (int j = 0; j < n - 1; ++j) sum += h_of_stream(rs.child(j));
            double mean = sum / static_cast<double>(n - 1);
            acc += mean * mean * mean * mean;
        }
        rep.ns.push_back(static_cast<double>(n));
        rep.fourth_moments.push_back(acc / static_cast<double>(resamples));
    }
    rep.fit = fit_loglog_slope(rep.ns, rep.fourth_moments);
    return rep;
}

// The production h: radial component of the mollified pair force at a fixed
// probe minus its exact mean under the sampling law (the mollified field of
// rho0, shell theorem), so E[h] = 0 by construction.
struct StaticForceFluctuation {
    InitialDensity f0;
    std::shared_ptr<const DoubleMollifierTable> eta;
    std::shared_ptr<const InitialFields> fields;
    Vec3 probe;

    explicit StaticForceFluctuation(const InitialDensity& density,
                                    std::shared_ptr<const DoubleMollifierTable> table,
                                    const Vec3& probe_point)
        : f0(density), eta(std::move(table)),
          fields(std::make_shared<InitialFields>(f0, eta)), probe(probe_point) {}

    double operator()(RngStream stream) const {
        Sample s = sample_one(f0, std::move(stream));
        Vec3 d = probe - s.x;
        double r = d.norm();
        Vec3 force = r > 0.0 ? d * (mollified_coulomb_field(r, *eta) / r) : Vec3{};
        double radial = force.dot(probe.normalized());
        return radial - fields->field(probe.norm());
    }
};

// Non-relativistic field comparison: the retarded mean-field force channels of
// a frozen moving cloud against the instantaneous mollified Coulomb field of
// the same cloud, plus the magnetic channel magnitude, across a c ladder.
struct FieldComparisonPoint {
    double c = 0.0;
    double e_channel_sup = 0.0;  // sup |F1(c) - instantaneous mollified field|
    double b_channel_sup = 0.0;  // sup |F2(c)|
};

struct FieldComparisonReport {
    std::vector<FieldComparisonPoint> points;
    SlopeFit e_slope;
    SlopeFit b_slope;
};

}  // namespace vmlab
