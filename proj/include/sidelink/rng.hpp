#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace sidelink {

// Deterministic xoshiro256** stream. The standard library distributions are
// implementation-defined, so everything that must reproduce bit-identical
// traces across platforms goes through this generator instead.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    // Independent child stream derived from the parent seed and a label.
    // Fork order does not matter; identical labels give identical streams.
    Rng fork(std::string_view label, uint64_t index = 0) const {
        uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (char c : label) {
            h ^= static_cast<uint8_t>(c);
            h *= 1099511628211ull;
        }
        h ^= index + 0x9e3779b97f4a7c15ull;
        uint64_t mix = seed_;
        return Rng(splitmix64(mix) ^ splitmix64(h));
    }

    uint64_t next_u64() {
        uint64_t result = rotl(state_[1] * 5, 7) * 9;
        uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; draws two uniforms per call, no cached spare.
    double normal(double mean = 0.0, double sigma = 1.0) {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * M_PI * u2);
    }

    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        // Rejection sampling keeps the draw unbiased.
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    bool chance(double p) { return uniform() < p; }

    void fill(std::span<uint8_t> out) {
        size_t i = 0;
        while (i < out.size()) {
            uint64_t v = next_u64();
            for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
                out[i] = static_cast<uint8_t>(v >> (8 * b));
            }
        }
    }

    uint64_t seed() const { return seed_; }

private:
    static uint64_t splitmix64(uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
    uint64_t seed_;
};

}  // namespace sidelink
