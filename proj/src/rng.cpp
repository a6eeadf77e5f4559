#include "dcrbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace dcrbm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed + kGolden) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t position)
    : seed_(seed), stream_(stream_id), position_(position), key_(derive_key(seed, stream_id)) {}

std::uint64_t RngStream::next_u64() {
    // SplitMix64 keyed by (seed, stream), indexed by position.
    const std::uint64_t counter = position_++;
    return mix64(key_ + (counter + 1) * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    // 1 - u1 lies in (0, 1], so the log is finite.
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::substream(std::uint64_t index) const {
    return RngStream(seed_, mix64(stream_ ^ mix64(index + kGolden)));
}

} // namespace dcrbm
