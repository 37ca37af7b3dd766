#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <vector>

#include "vmlab/errors.hpp"
#include "vmlab/params.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab {

struct HistoryRecord {
    double t = 0.0;
    Vec3 x;
    Vec3 v;
    Vec3 vhat;  // exact trajectory derivative dx/dt, cached at append
    Vec3 a;     // dv/dt at this node
};

// Dense-output past trajectory of one particle: records at uniform step dt,
// cubic-Hermite interpolation between them. Retarded-time lookups query
// position/velocity at arbitrary past s; x interpolates on (x, vhat) and v on
// (v, a), both O(dt^4) between exact nodes.
class TrajectoryHistory {
  public:
    TrajectoryHistory() = default;
    TrajectoryHistory(double dt, double c) : dt_(dt), c_(c) {}

    void append(double t, const Vec3& x, const Vec3& v, const Vec3& a) {
        HistoryRecord rec{t, x, v, hat_velocity(v, c_), a};
        if (!buf_.empty()) {
            double expected = buf_.back().t + dt_;
            if (std::abs(t - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
                throw InternalError("history records must advance by the uniform step dt");
        }
        buf_.push_back(rec);
    }

    void replace_last(double t, const Vec3& x, const Vec3& v, const Vec3& a) {
        if (buf_.empty()) throw InternalError("cannot replace a record in an empty history");
        buf_.back() = HistoryRecord{t, x, v, hat_velocity(v, c_), a};
    }

    void evict_before(double t_min) {
        while (buf_.size() > 2 && buf_[1].t <= t_min) buf_.pop_front();
    }

    bool empty() const { return buf_.empty(); }
    std::size_t size() const { return buf_.size(); }
    double front_time() const { return buf_.front().t; }
    double back_time() const { return buf_.back().t; }
    double step() const { return dt_; }
    const HistoryRecord& front() const { return buf_.front(); }
    const HistoryRecord& back() const { return buf_.back(); }

    Vec3 position_at(double s) const {
        if (s <= buf_.front().t) return buf_.front().x;  // frozen pre-history
        if (s >= buf_.back().t) return buf_.back().x;
        auto [k, u] = locate(s);
        return hermite(buf_[k].x, buf_[k].vhat, buf_[k + 1].x, buf_[k + 1].vhat, u,
                       buf_[k + 1].t - buf_[k].t);
    }

    Vec3 velocity_at(double s) const {
        if (s <= buf_.front().t) return buf_.front().v;
        if (s >= buf_.back().t) return buf_.back().v;
        auto [k, u] = locate(s);
        return hermite(buf_[k].v, buf_[k].a, buf_[k + 1].v, buf_[k + 1].a, u,
                       buf_[k + 1].t - buf_[k].t);
    }

    Vec3 vhat_at(double s) const { return hat_velocity(velocity_at(s), c_); }

  private:
    std::pair<std::size_t, double> locate(double s) const {
        double pos = (s - buf_.front().t) / dt_;
        auto k = static_cast<std::size_t>(pos);
        if (k + 1 >= buf_.size()) k = buf_.size() - 2;
        double u = (s - buf_[k].t) / dt_;
        // guard against roundoff walking one cell over
        if (u > 1.0 && k + 2 < buf_.size()) {
            ++k;
            u = (s - buf_[k].t) / dt_;
        }
        return {k, std::min(std::max(u, 0.0), 1.0)};
    }

    static Vec3 hermite(const Vec3& p0, const Vec3& m0, const Vec3& p1, const Vec3& m1, double u,
                        double h) {
        double u2 = u * u, u3 = u2 * u;
        return p0 * (2 * u3 - 3 * u2 + 1) + m0 * ((u3 - 2 * u2 + u) * h) +
               p1 * (-2 * u3 + 3 * u2) + m1 * ((u3 - u2) * h);
    }

    double dt_ = 1.0;
    double c_ = 1.0;
    std::deque<HistoryRecord> buf_;
};

// Prescribed straight-line source: x(s) = x0 + w s with coordinate velocity w,
// |w| < c. Records carry v = hat^{-1}(w) so the stored vhat equals w exactly and
// the Hermite interpolant reproduces the line to machine precision.
inline TrajectoryHistory make_linear_history(const Vec3& x0, const Vec3& w, double dt,
                                             double t_end, double c) {
    TrajectoryHistory h(dt, c);
    Vec3 v = inverse_hat_velocity(w, c);
    auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-12));
    for (std::size_t k = 0; k <= steps; ++k) {
        double s = static_cast<double>(k) * dt;
        h.append(s, x0 + w * s, v, Vec3{});
    }
    return h;
}

}  // namespace vmlab
