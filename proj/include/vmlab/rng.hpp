#pragma once

#include <cmath>
#include <cstdint>

namespace vmlab {

// Deterministic splittable RNG.
//
// Every stream is identified by a 64-bit key derived from the master seed by
// hashing child labels into it (SplitMix64 finalizer). Draw i of a stream
// depends only on (key, i), so per-particle and per-trial streams reproduce
// bit-identically regardless of thread count or evaluation order.
namespace rng_detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}
}  // namespace rng_detail

class RngStream {
  public:
    explicit RngStream(std::uint64_t key) : key_(rng_detail::mix(key + rng_detail::kGolden)) {}

    // Derive an independent child stream; labels are small enum-like tags or indices.
    RngStream child(std::uint64_t label) const {
        return RngStream(key_ ^ rng_detail::mix(label * 0xD1342543DE82EF95ull + 0x632BE59BD9B4E019ull));
    }

    std::uint64_t next_u64() { return rng_detail::mix(key_ + (++counter_) * rng_detail::kGolden); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one value per call, pair cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Well-known child labels so streams cannot collide between purposes.
namespace rng_label {
constexpr std::uint64_t kTrial = 1;
constexpr std::uint64_t kEnsemble = 2;
constexpr std::uint64_t kCloud = 3;
constexpr std::uint64_t kRung = 4;
constexpr std::uint64_t kResample = 5;
constexpr std::uint64_t kStub = 6;
}  // namespace rng_label

}  // namespace vmlab
