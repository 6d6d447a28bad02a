#pragma once

#include <cstdint>
#include <random>

namespace lbsim {

// splitmix64 step, used to stretch seeds into independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// One random stream. Wraps mt19937_64 (fully specified by the standard, so
// traces are reproducible across platforms) and draws uniforms/exponentials
// by explicit inversion instead of the implementation-defined std
// distributions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1], safe as a log argument.
    double next_uniform_pos() { return 1.0 - next_uniform(); }

    double next_exponential(double mean) {
        return -mean * std::log(next_uniform_pos());
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n));
    }

private:
    std::mt19937_64 gen_;
};

// Purpose tags for deriving independent sub-streams from one trial seed.
// Keeping arrivals/sizes separate from policy randomness means changing the
// policy does not perturb the sampled arrival/size path, enabling paired
// comparisons across policies on identical workloads.
enum class StreamPurpose : std::uint64_t {
    Arrivals = 1,
    Sizes = 2,
    Policy = 3,
    Routing = 4,
    Delays = 5,
};

inline RngStream derive_stream(std::uint64_t root_seed, StreamPurpose purpose) {
    std::uint64_t s = root_seed ^ (0xA076'1D64'78BD'642FULL * static_cast<std::uint64_t>(purpose));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return RngStream(a ^ (b << 1));
}

}  // namespace lbsim
