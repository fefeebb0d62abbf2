#pragma once

#include <cstdint>

namespace contagion {

// splitmix64 finalizer. Good avalanche, cheap, and fully specified here so
// generated traces do not depend on standard-library RNG internals.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic random stream (splitmix64 sequence).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // p <= 0 never fires, p >= 1 always fires; neither consumes state.
    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return next_unit() < p;
    }

    // Uniform integer in [0, n). n must be >= 1.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

private:
    std::uint64_t state_;
};

// Independent substream seed for (episode seed, salt). Used to give each
// robot and the engine their own streams: adding a robot never perturbs
// the randomness any other robot sees.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt) {
    return mix64(seed ^ mix64(salt));
}

inline constexpr std::uint64_t kRobotStreamSalt = 0x726f626f74ULL;  // per-robot: salt + index
inline constexpr std::uint64_t kEngineStreamSalt = 0x656e67696eULL;

inline Rng robot_stream(std::uint64_t seed, int robot_index) {
    return Rng(derive_stream(seed, kRobotStreamSalt + static_cast<std::uint64_t>(robot_index)));
}

inline Rng engine_stream(std::uint64_t seed) {
    return Rng(derive_stream(seed, kEngineStreamSalt));
}

}  // namespace contagion
