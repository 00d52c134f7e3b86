#pragma once

#include <cmath>
#include <cstdint>

// Counter-based pseudo-random utilities. Every draw is a pure function of
// (seed, index), so concurrent callers and re-runs see identical streams.
namespace tarot::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer.
inline std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// The index-th word of the splitmix64 stream for `seed`.
inline std::uint64_t at(std::uint64_t seed, std::uint64_t index) {
    return mix(seed + (index + 1) * kGolden);
}

// Derive an independent stream seed, e.g. one per trace archetype.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream + kGolden));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(at(seed, index) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; draw `index` consumes the uniform pair
// (2*index, 2*index + 1) so neighbouring draws never share bits.
inline double normal01(std::uint64_t seed, std::uint64_t index) {
    const double u1 = uniform01(seed, 2 * index);
    const double u2 = uniform01(seed, 2 * index + 1);
    const double r = std::sqrt(-2.0 * std::log(u1 > 0.0 ? u1 : 0x1.0p-53));
    return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

// Sequential generator for bulk draws (Monte Carlo loops).
class Splitmix64 {
public:
    explicit Splitmix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix(state_);
    }

    double next_uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace tarot::rng
