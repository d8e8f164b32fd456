#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace entromon {

/// Seeded generator with explicit draw algorithms. The raw mt19937_64
/// stream is standard-specified and the conversions below avoid
/// std::*_distribution, so identical seeds give identical draws on any
/// platform/compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive. Modulo bias is negligible
    /// for the small ranges this library draws from.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    /// Standard normal via Box-Muller (deterministic, one value per call).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Derive an independent child generator for a named substream.
    Rng fork(std::uint64_t stream) {
        return Rng(mix(engine_(), stream));
    }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the combined words
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// One categorical draw over five probabilities by CDF inversion.
inline int draw_category(Rng& rng, const std::array<double, 5>& probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        acc += probs[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    return 4;
}

/// k categorical draws aggregated into per-category counts.
inline std::array<int, 5> multinomial_counts(Rng& rng, const std::array<double, 5>& probs, int k) {
    std::array<int, 5> counts{0, 0, 0, 0, 0};
    for (int i = 0; i < k; ++i) {
        ++counts[static_cast<std::size_t>(draw_category(rng, probs))];
    }
    return counts;
}

} // namespace entromon
