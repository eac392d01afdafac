#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace triplet {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Derive the seed of a named sub-stream from one root seed. Every module
/// draws from its own stream, so replaying a run never depends on the order
/// in which modules happen to consume randomness.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index = 0) {
    return splitmix64(root ^ splitmix64(fnv1a64(name) + 0x632be59bd9b4e019ull * index));
}

/// mt19937_64 with hand-rolled variate transforms. The standard library's
/// distribution objects are not pinned by the standard, so all transforms are
/// spelled out here to keep seeded output identical across toolchains.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}
    RandomStream(std::uint64_t root, std::string_view name, std::uint64_t index = 0)
        : eng_(substream_seed(root, name, index)) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_below(std::uint64_t n) {
        // modulo bias is < 2^-40 for the n used here (n << 2^64)
        return eng_() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) {
        double u = uniform();
        while (u >= 1.0) u = uniform();
        return -std::log1p(-u) / rate;
    }

    /// Poisson count. Exact product method below 30, normal approximation
    /// above (used only where the count feeds an error estimate).
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {
            const double limit = std::exp(-lambda);
            std::uint64_t k = 0;
            double prod = uniform();
            while (prod > limit) {
                ++k;
                prod *= uniform();
            }
            return k;
        }
        const double g = normal(lambda, std::sqrt(lambda));
        return g <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(g));
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Mean-reverting (Ornstein-Uhlenbeck) drift with exact discretization.
/// Used for the slow pump-bandwidth wander; `floor` keeps the bandwidth
/// physical when a long excursion would cross zero.
struct MeanRevertingDrift {
    double mean = 0.0;
    double stddev = 0.0;
    double timescale_s = 1.0;
    double floor = 0.0;

    double state = 0.0;

    void reset(RandomStream& rng) { state = clamp(mean + stddev * rng.normal()); }

    double step(double dt_s, RandomStream& rng) {
        const double decay = std::exp(-dt_s / timescale_s);
        const double noise = stddev * std::sqrt(1.0 - decay * decay);
        state = clamp(mean + (state - mean) * decay + noise * rng.normal());
        return state;
    }

  private:
    double clamp(double v) const { return v < floor ? floor : v; }
};

}  // namespace triplet
