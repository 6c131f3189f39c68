#pragma once

// Counter-based deterministic random streams. Each logical unit of work
// (sample index, repetition index, chunk index) derives its own stream from
// the root seed, so results do not depend on thread count or chunk layout,
// and repeated runs with the same seed are bitwise identical across
// platforms (no standard-library distributions are used).

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fairpost::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed for unit `index` under `seed`.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + index * 0xbf58476d1ce4e5b9ULL);
    splitmix64(s);
    return splitmix64(s);
}

class Stream {
  public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform on (0,1): 53 mantissa bits, offset so 0 is excluded.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Box-Muller; the second value of each pair is cached.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    // Student t with integer dof: normal over sqrt(chi^2_dof / dof).
    double next_student_t(int dof) {
        const double z = next_normal();
        double chi2 = 0.0;
        for (int i = 0; i < dof; ++i) {
            const double zi = next_normal();
            chi2 += zi * zi;
        }
        return z / std::sqrt(chi2 / static_cast<double>(dof));
    }

    // Index into a categorical distribution given by nonnegative weights
    // summing to ~1; the final bucket absorbs rounding slack.
    int next_categorical(const double* probs, int k) {
        const double u = next_unit();
        double acc = 0.0;
        for (int i = 0; i + 1 < k; ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return k - 1;
    }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace fairpost::rng
