#ifndef SPARSECOMP_RNG_HPP
#define SPARSECOMP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace sparsecomp {

/// SplitMix64 (Steele, Lea, Flood). Used for seeding and for deriving
/// independent sub-seeds; passes BigCrush on its own.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        return mix(z);
    }

    /// The SplitMix64 output finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Derive the seed of stream (a, b) under a master seed.
///
///   h0 = mix(master + 0x9E3779B97F4A7C15)
///   h1 = mix(h0 ^ (a * 0xD1B54A32D192ED03 + 0x8CB92BA72F3D8DD7))
///   h2 = mix(h1 ^ (b * 0xABC98388FB8FAC03 + 0x632BE59BD9B4E019))
///
/// where mix is the SplitMix64 finalizer. The result depends only on
/// (master, a, b), never on how many draws other streams have consumed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
    std::uint64_t h = SplitMix64::mix(master + 0x9E3779B97F4A7C15ULL);
    h = SplitMix64::mix(h ^ (a * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    h = SplitMix64::mix(h ^ (b * 0xABC98388FB8FAC03ULL + 0x632BE59BD9B4E019ULL));
    return h;
}

/// xoshiro256** 1.0 with a SplitMix64-expanded seed. Satisfies
/// UniformRandomBitGenerator so it can drive <random> if needed, but the
/// library only uses the platform-independent helpers below.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& s : s_) s = sm.next();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Standard normal via the Marsaglia polar method.
    double normal() noexcept {
        if (hasSpare_) {
            hasSpare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        hasSpare_ = true;
        return u * f;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

}  // namespace sparsecomp

#endif  // SPARSECOMP_RNG_HPP
