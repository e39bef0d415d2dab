#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace mclnn {

/// Seeded xoshiro256** generator. The recurrence is written out here (and in
/// the README) so sequences are identical across platforms and toolchains;
/// nothing in the project uses a platform-default generator.
///
/// Seeding: four rounds of splitmix64 over the user seed.
/// Step:    r = rotl(s1 * 5, 7) * 9, then the xoshiro256 state update.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
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

    /// Uniform in [0, 1) with 53 bits of resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n). Plain modulo; the negligible bias is
    /// accepted in exchange for a branch-free, platform-identical sequence.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// splitmix64 scramble, exposed for deriving per-fold seeds.
    static std::uint64_t splitmix64(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

/// Seed for fold `index` derived from a base seed; documented so reruns of
/// any single fold reproduce the full-run result bit for bit.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base + index + 1;
    return Rng::splitmix64(s);
}

}  // namespace mclnn
