#pragma once

#include <cstdint>
#include <limits>

namespace splitinf {

/// Reproducible 64-bit generator identified by (seed, stream_id).
///
/// The engine is xoshiro256** with its state expanded from the identity pair
/// through SplitMix64. Child streams are derived from the identity alone, never
/// from the current position, so a parallel task indexed by `i` always sees
/// the same sequence no matter which thread runs it or what ran before.
///
/// Satisfies UniformRandomBitGenerator; use it with <random> distributions.
class SeededRng {
public:
    using result_type = std::uint64_t;

    explicit SeededRng(std::uint64_t seed = 0, std::uint64_t stream_id = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Independent stream keyed by this generator's identity and `stream`.
    [[nodiscard]] SeededRng child(std::uint64_t stream) const noexcept;

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_[4];
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

} // namespace splitinf
