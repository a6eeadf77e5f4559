#pragma once

#include <cstdint>

namespace dcrbm {

/// Counter-based random stream.
///
/// Draw k of stream (seed, stream_id) is a pure function of those three
/// integers, so sequences are identical across runs, platforms and thread
/// schedules. Each draw advances `position` by one.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t position = 0);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// One Bernoulli draw; consumes exactly one uniform.
    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal();

    /// A statistically independent stream derived from this one's identity
    /// (not its position).
    RngStream substream(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t position() const { return position_; }

    friend bool operator==(const RngStream&, const RngStream&) = default;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t position_ = 0;
    std::uint64_t key_ = 0;
};

/// Reserved stream ids. Chain slots use ids below 2^32.
namespace streams {
inline constexpr std::uint64_t kInit = 0x1'0000'0000ULL;
inline constexpr std::uint64_t kShuffleBase = 0x2'0000'0000ULL;
inline constexpr std::uint64_t kEvaluationBase = 0x3'0000'0000ULL;
inline constexpr std::uint64_t kBinarize = 0x4'0000'0000ULL;
} // namespace streams

} // namespace dcrbm
