#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string_view>

namespace tomosar {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw is
// a pure function of (key, counter), so independent substreams need no
// shared state and results do not depend on thread scheduling.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::string_view name = "philox4x32-10";
    static constexpr int version = 1;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = Counter{
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0),
            };
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Stream domains keep e.g. noise draws and block-sampling draws for the same
// pixel statistically independent even when they share (seed, stream id).
enum class StreamDomain : std::uint32_t {
    noise = 1,
    solver = 2,
    seed_derivation = 3,
    power_iteration = 4,
    geometry = 5,
    test = 0xFFFF,
};

// One reproducible substream keyed by (seed, domain, stream id). Satisfies
// UniformRandomBitGenerator, but prefer the members below over <random>
// distributions: those are implementation-defined and break cross-platform
// byte determinism.
class RandomStream {
public:
    using result_type = std::uint32_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream_id, StreamDomain domain = StreamDomain::solver) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          domain_(static_cast<std::uint32_t>(domain)),
          stream_lo_(static_cast<std::uint32_t>(stream_id)),
          stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return 0xFFFFFFFFu; }

    result_type operator()() noexcept {
        if (pos_ == 4) {
            buffer_ = Philox4x32::block({block_index_, domain_, stream_lo_, stream_hi_}, key_);
            ++block_index_;
            pos_ = 0;
        }
        return buffer_[pos_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal by Box-Muller; the second variate is cached.
    double normal() noexcept;

    // Circular complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance) noexcept;

private:
    Philox4x32::Key key_;
    std::uint32_t domain_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint32_t block_index_ = 0;
    Philox4x32::Counter buffer_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Child seed for a (seed, stream id) pair, e.g. a per-pixel solver seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept;

} // namespace tomosar
