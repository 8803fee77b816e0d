#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace detect {

// splitmix64: seed expansion and labeled stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// xoshiro256++ — small, fast, and identical on every platform, unlike the
// std distributions. All engine sampling in the simulator goes through this
// so outputs are reproducible from the scenario seed alone.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0, 1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        // rejection keeps the draw unbiased for any bound
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    long binomial(long trials, double p) {
        long hits = 0;
        for (long i = 0; i < trials; ++i) hits += bernoulli(p) ? 1 : 0;
        return hits;
    }

    // Knuth's product method; demand means in scenarios are small.
    long poisson(double mean) {
        const double limit = std::exp(-mean);
        double prod = 1.0;
        long k = -1;
        do {
            ++k;
            prod *= uniform();
        } while (prod > limit);
        return k;
    }

    // Marsaglia polar method with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    double pareto(double alpha, double xmin) {
        return xmin * std::pow(1.0 - uniform(), -1.0 / alpha);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Per-run seed: master seed XOR run index.
inline std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t run_index) {
    return master_seed ^ run_index;
}

// Substream seed for one named process within a run (demand/price/rotation/
// supply streams stay decoupled regardless of sampling order).
inline std::uint64_t stream_seed(std::uint64_t run_seed_value, std::string_view label) {
    std::uint64_t mixed = run_seed_value ^ fnv1a64(label);
    return splitmix64(mixed);
}

}  // namespace detect
