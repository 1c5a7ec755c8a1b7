#pragma once

#include <bit>
#include <cstdint>

namespace rdlab {

/// Splittable counter-style PRNG keyed by (seed, stream_id).
///
/// Each stream is a SplitMix64-type generator: a 64-bit counter advanced by a
/// per-stream odd increment, pushed through a bit-mixing finalizer. The state
/// and increment are derived from (seed, stream_id) only, so the same pair
/// always reproduces the same sequence and two streams share no state.
///
/// Stream-id layout used by the pipeline: replicate r, chain c map to
/// stream_id = r * 2^16 + c (cells of a study grid occupy bits 32+).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id) {
        const std::uint64_t a = mix64(seed + 0x9E3779B97F4A7C15ull);
        const std::uint64_t b = mix64(stream_id + 0xD1B54A32D192ED03ull);
        state_ = mix64(a ^ b);
        gamma_ = mix_gamma(a + 0x9E3779B97F4A7C15ull * b);
    }

    std::uint64_t next_u64() {
        state_ += gamma_;
        return mix64(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Derived stream with the same seed and an offset stream id.
    RngStream substream(std::uint64_t offset) const {
        return RngStream(seed_, stream_id_ + offset);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    // Odd increment with enough bit transitions (same criterion as
    // java.util.SplittableRandom's gamma derivation).
    static std::uint64_t mix_gamma(std::uint64_t z) {
        z ^= z >> 33;
        z *= 0xFF51AFD7ED558CCDull;
        z ^= z >> 33;
        z *= 0xC4CEB9FE1A85EC53ull;
        z ^= z >> 33;
        z |= 1ull;
        if (std::popcount(z ^ (z >> 1)) < 24) {
            z ^= 0xAAAAAAAAAAAAAAAAull;
        }
        return z;
    }

    std::uint64_t state_;
    std::uint64_t gamma_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

/// (seed, first stream id) pair handed to samplers; chain c uses stream + c.
struct StreamSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    RngStream chain(std::uint64_t c) const { return RngStream(seed, stream + c); }
};

} // namespace rdlab
