#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmlab/mollifier.hpp"
#include "vmlab/params.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab {

// Tabulation grid for the materialized (tau, r) tensor. The shell of Y^N has
// radial thickness 2 * shell_half_width and sweeps outward at speed c, so the
// spacings must resolve shell_half_width/8 (radially) and /(8c) (in tau).
struct WaveKernelGrid {
    double tau_max = 1.0;
    double r_max = 4.0;
    double tau_step = 0.0;
    double r_step = 0.0;
};

// Y^N(tau, r): the free-wave fundamental solution convolved twice with chi^N,
// reduced to one dimension through the spherical mean of the radial eta^N:
//
//   Y^N(tau, r)   = (P(r + c tau) - P(|r - c tau|)) / (2 c r),   P(x) = int_0^x u eta^N,
//   dtau Y^N      = ((r+R) eta(r+R) + (r-R) eta(|r-R|)) / (2 r),  R = c tau,
//   dr Y^N        = -Y^N / r + ((r+R) eta(r+R) - (r-R) eta(|r-R|)) / (2 c r).
//
// The derivatives come from differentiating the integral bounds, never from
// differencing tables. Support is exactly { |r - c tau| <= 2 N^{-theta} }.
class SmoothedWaveKernel {
  public:
    SmoothedWaveKernel(const RegularizationParams& p,
                       std::shared_ptr<const DoubleMollifierTable> eta)
        : params_(p), c_(p.light_speed), eta_(std::move(eta)),
          shell_half_width_(eta_->support_radius()) {}

    const RegularizationParams& params() const { return params_; }
    double light_speed() const { return c_; }
    double shell_half_width() const { return shell_half_width_; }  // 2 N^{-theta}
    const DoubleMollifierTable& eta() const { return *eta_; }

    double value(double tau, double r) const {
        if (tau <= 0.0) return 0.0;
        double R = c_ * tau;
        if (std::abs(r - R) >= shell_half_width_) return 0.0;
        if (r < kTinyR * shell_half_width_) return tau * eta_->value(R);
        return (eta_->cum_u(r + R) - eta_->cum_u(std::abs(r - R))) / (2.0 * c_ * r);
    }

    double d_tau(double tau, double r) const {
        if (tau <= 0.0) return 0.0;
        double R = c_ * tau;
        if (std::abs(r - R) >= shell_half_width_) return 0.0;
        if (r < kTinyR * shell_half_width_)
            return eta_->value(R) + R * eta_->derivative(R);
        return ((r + R) * eta_->value(r + R) + (r - R) * eta_->value(std::abs(r - R))) /
               (2.0 * r);
    }

    double d_r(double tau, double r) const {
        if (tau <= 0.0) return 0.0;
        double R = c_ * tau;
        if (std::abs(r - R) >= shell_half_width_) return 0.0;
        if (r < kTinyR * shell_half_width_) return 0.0;
        double y = (eta_->cum_u(r + R) - eta_->cum_u(std::abs(r - R))) / (2.0 * c_ * r);
        double bracket = ((r + R) * eta_->value(r + R) - (r - R) * eta_->value(std::abs(r - R))) /
                         (2.0 * c_ * r);
        return bracket - y / r;
    }

    // grad_x Y^N(tau, x) = dr Y^N * x / |x|; the r -> 0 limit is the zero vector.
    Vec3 gradient(double tau, const Vec3& x) const {
        double r = x.norm();
        if (r <= 0.0) return {};
        return x * (d_r(tau, r) / r);
    }

    // Second tau-derivative, used by the wave-equation residual diagnostics.
    double d_tau_tau(double tau, double r) const {
        if (tau <= 0.0) return 0.0;
        double R = c_ * tau;
        if (std::abs(r - R) >= shell_half_width_) return 0.0;
        if (r < kTinyR * shell_half_width_)
            return c_ * (2.0 * eta_->derivative(R) + R * second_derivative(R));
        double q = std::abs(r - R);
        return c_ / (2.0 * r) *
               (eta_->value(r + R) + (r + R) * eta_->derivative(r + R) - eta_->value(q) -
                q * eta_->derivative(q));
    }

    bool has_grid() const { return !tab_y_.empty(); }
    const WaveKernelGrid& grid() const { return grid_; }
    std::size_t n_tau() const { return n_tau_; }
    std::size_t n_r() const { return n_r_; }
    const std::vector<double>& grid_y() const { return tab_y_; }
    const std::vector<double>& grid_d_tau() const { return tab_dtau_; }
    const std::vector<double>& grid_d_r() const { return tab_dr_; }

    void adopt_grid(const WaveKernelGrid& g, std::size_t n_tau, std::size_t n_r,
                    std::vector<double> y, std::vector<double> dtau, std::vector<double> dr) {
        validate_grid(g);
        if (y.size() != n_tau * n_r || dtau.size() != y.size() || dr.size() != y.size())
            throw IoError("wave-kernel table size mismatch");
        grid_ = g;
        n_tau_ = n_tau;
        n_r_ = n_r;
        tab_y_ = std::move(y);
        tab_dtau_ = std::move(dtau);
        tab_dr_ = std::move(dr);
    }

    void materialize(const WaveKernelGrid& g) {
        validate_grid(g);
        grid_ = g;
        n_tau_ = static_cast<std::size_t>(g.tau_max / g.tau_step) + 1;
        n_r_ = static_cast<std::size_t>(g.r_max / g.r_step) + 1;
        tab_y_.assign(n_tau_ * n_r_, 0.0);
        tab_dtau_.assign(n_tau_ * n_r_, 0.0);
        tab_dr_.assign(n_tau_ * n_r_, 0.0);
        for (std::size_t i = 0; i < n_tau_; ++i) {
            double tau = static_cast<double>(i) * g.tau_step;
            for (std::size_t j = 0; j < n_r_; ++j) {
                double r = static_cast<double>(j) * g.r_step;
                std::size_t idx = i * n_r_ + j;
                tab_y_[idx] = value(tau, r);
                tab_dtau_[idx] = d_tau(tau, r);
                tab_dr_[idx] = d_r(tau, r);
            }
        }
    }

    void validate_grid(const WaveKernelGrid& g) const {
        double max_r_step = shell_half_width_ / 8.0;
        double max_tau_step = shell_half_width_ / (8.0 * c_);
        if (!(g.tau_max > 0.0) || !(g.r_max > 0.0) || !(g.tau_step > 0.0) || !(g.r_step > 0.0))
            throw ConfigError("wave-kernel grid extents and steps must be positive");
        if (g.r_step > max_r_step)
            throw ConfigError("wave-kernel grid under-resolved: r_step " +
                              std::to_string(g.r_step) + " exceeds shell_half_width/8 = " +
                              std::to_string(max_r_step));
        if (g.tau_step > max_tau_step)
            throw ConfigError("wave-kernel grid under-resolved: tau_step " +
                              std::to_string(g.tau_step) + " exceeds shell_half_width/(8c) = " +
                              std::to_string(max_tau_step));
    }

  private:
    double second_derivative(double u) const {
        double h = 1e-4 * shell_half_width_;
        return (eta_->derivative(u + h) - eta_->derivative(u - h)) / (2.0 * h);
    }

    static constexpr double kTinyR = 1e-9;

    RegularizationParams params_;
    double c_;
    std::shared_ptr<const DoubleMollifierTable> eta_;
    double shell_half_width_;

    WaveKernelGrid grid_;
    std::size_t n_tau_ = 0, n_r_ = 0;
    std::vector<double> tab_y_, tab_dtau_, tab_dr_;
};

inline WaveKernelGrid default_wave_grid(const RegularizationParams& p, double tau_max,
                                        double r_max = 0.0) {
    WaveKernelGrid g;
    double w2 = 2.0 * p.mollifier_width();
    g.tau_max = tau_max;
    g.r_max = r_max > 0.0 ? r_max : p.light_speed * tau_max + 2.0 * w2;
    g.tau_step = w2 / (16.0 * p.light_speed);
    g.r_step = w2 / 16.0;
    return g;
}

namespace wave_cache {

constexpr std::uint32_t kMagic = 0x564D574Bu;  // "VMWK"
constexpr std::uint32_t kVersion = 1;

struct Key {
    std::int64_t n;
    double theta;
    double c;
    WaveKernelGrid grid;
};

inline std::uint64_t key_hash(const Key& k) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mixin = [&h](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    mixin(&k.n, sizeof k.n);
    mixin(&k.theta, sizeof k.theta);
    mixin(&k.c, sizeof k.c);
    mixin(&k.grid, sizeof k.grid);
    std::uint32_t v = kVersion;
    mixin(&v, sizeof v);
    return h;
}

inline std::filesystem::path cache_path(const std::filesystem::path& dir, const Key& k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "yk_%016llx.bin",
                  static_cast<unsigned long long>(key_hash(k)));
    return dir / buf;
}

inline void store(const std::filesystem::path& dir, const SmoothedWaveKernel& kernel) {
    if (!kernel.has_grid()) throw IoError("cannot cache a wave kernel without a materialized grid");
    Key k{kernel.params().n_particles, kernel.params().theta, kernel.light_speed(),
          kernel.grid()};
    std::filesystem::create_directories(dir);
    std::ofstream os(cache_path(dir, k), std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open wave-kernel cache file for writing");
    auto put = [&os](const void* p, std::size_t n) {
        os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    put(&kMagic, sizeof kMagic);
    put(&kVersion, sizeof kVersion);
    put(&k.n, sizeof k.n);
    put(&k.theta, sizeof k.theta);
    put(&k.c, sizeof k.c);
    put(&k.grid, sizeof k.grid);
    std::uint64_t nt = kernel.n_tau(), nr = kernel.n_r();
    put(&nt, sizeof nt);
    put(&nr, sizeof nr);
    for (const auto* arr : {&kernel.grid_y(), &kernel.grid_d_tau(), &kernel.grid_d_r()})
        put(arr->data(), arr->size() * sizeof(double));
}

struct CachedTables {
    WaveKernelGrid grid;
    std::uint64_t n_tau = 0, n_r = 0;
    std::vector<double> y, d_tau, d_r;
};

inline std::optional<CachedTables> load(const std::filesystem::path& dir, const Key& want) {
    auto path = cache_path(dir, want);
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    auto get = [&is](void* p, std::size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    };
    std::uint32_t magic = 0, version = 0;
    get(&magic, sizeof magic);
    get(&version, sizeof version);
    if (magic != kMagic || version != kVersion) return std::nullopt;
    Key k{};
    get(&k.n, sizeof k.n);
    get(&k.theta, sizeof k.theta);
    get(&k.c, sizeof k.c);
    get(&k.grid, sizeof k.grid);
    if (k.n != want.n || k.theta != want.theta || k.c != want.c ||
        std::memcmp(&k.grid, &want.grid, sizeof k.grid) != 0)
        return std::nullopt;
    CachedTables out;
    out.grid = k.grid;
    get(&out.n_tau, sizeof out.n_tau);
    get(&out.n_r, sizeof out.n_r);
    std::size_t total = static_cast<std::size_t>(out.n_tau) * out.n_r;
    out.y.resize(total);
    out.d_tau.resize(total);
    out.d_r.resize(total);
    get(out.y.data(), total * sizeof(double));
    get(out.d_tau.data(), total * sizeof(double));
    get(out.d_r.data(), total * sizeof(double));
    if (!is) return std::nullopt;
    return out;
}

}  // namespace wave_cache

// Builds the kernel, materializes the (tau, r) tensor, and (optionally) round-trips
// it through the on-disk cache so hits are bit-identical to fresh builds.
inline SmoothedWaveKernel build_wave_kernel(const RegularizationParams& p, double tau_max,
                                            const WaveKernelGrid* grid_spec = nullptr,
                                            const std::filesystem::path* cache_dir = nullptr) {
    if (!(tau_max > 0.0)) throw ConfigError("tau_max must be positive");
    auto eta = build_double_mollifier(build_mollifier(p));
    SmoothedWaveKernel kernel(p, eta);
    WaveKernelGrid g = grid_spec ? *grid_spec : default_wave_grid(p, tau_max);
    kernel.validate_grid(g);
    if (cache_dir) {
        wave_cache::Key key{p.n_particles, p.theta, p.light_speed, g};
        if (auto cached = wave_cache::load(*cache_dir, key)) {
            kernel.adopt_grid(cached->grid, static_cast<std::size_t>(cached->n_tau),
                              static_cast<std::size_t>(cached->n_r), std::move(cached->y),
                              std::move(cached->d_tau), std::move(cached->d_r));
            return kernel;
        }
        kernel.materialize(g);
        wave_cache::store(*cache_dir, kernel);
        return kernel;
    }
    kernel.materialize(g);
    return kernel;
}

// Lightweight constructor for the force loops: no tensor, evaluation only.
inline SmoothedWaveKernel make_wave_kernel(const RegularizationParams& p) {
    return SmoothedWaveKernel(p, build_double_mollifier(build_mollifier(p)));
}

}  // namespace vmlab
