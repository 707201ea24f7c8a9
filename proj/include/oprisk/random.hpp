#pragma once

#include <cstdint>
#include <limits>

namespace oprisk {

// Purposes used to key independent substreams off one master seed.
enum class StreamPurpose : std::uint64_t {
    Sample = 1,
    Contamination = 2,
    MonteCarlo = 3,
    Calibration = 4,
    Cli = 5,
};

/// Counter-based random stream (SplitMix64 finalizer applied to key + counter).
///
/// A stream is fully determined by its key and position, so substreams for
/// (seed, replication, purpose) can be created in any order on any thread and
/// still produce identical draws. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t key = 0) noexcept : key_(mix(key)) {}

    static RandomStream keyed(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) noexcept {
        std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
        k = mix(k ^ (index * 0xbb67ae8584caa73bULL));
        k = mix(k ^ (static_cast<std::uint64_t>(purpose) * 0x3c6ef372fe94f82bULL));
        return RandomStream(k);
    }

    // Child stream; the parent is not advanced.
    RandomStream substream(std::uint64_t index) const noexcept {
        return RandomStream(key_ ^ mix(index + 0xa54ff53a5f1d36f1ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t position() const noexcept { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace oprisk
