#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace faceanon {

/// xoshiro256** with splitmix64 seeding. std::mt19937 plus the standard
/// distributions is implementation-defined across libstdc++ versions; the
/// reproducibility contract (bit-exact checkpoint resume, recorded draw
/// traces) needs every byte of the stream pinned, so the generator and the
/// uniform/normal transforms are spelled out here.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0,1) with 53 bits; identical on every platform.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection-free modulo is fine here: n is
    /// tiny relative to 2^64 in every call site, and reproducibility only
    /// needs a pinned algorithm.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller (always consumes two uniforms so the
    /// stream position is a pure function of the call count).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            auto j = uniform_int(i);
            std::swap(first[i - 1], first[j]);
        }
    }

    /// Independent child stream keyed by (state-derived seed, key). Used to
    /// make per-step / per-purpose randomness a pure function of the master
    /// seed and the counters, which is what makes mid-run resume exact.
    static Rng derive(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b = 0) {
        std::uint64_t x = seed;
        std::uint64_t mixed = splitmix64(x) ^ (0x9e3779b97f4a7c15ull * (key_a + 1)) ^
                              (0xbf58476d1ce4e5b9ull * (key_b + 1));
        return Rng(mixed);
    }

    std::array<std::uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace faceanon
