#include "tomosar/random.hpp"

#include <cmath>
#include <numbers>

namespace tomosar {

double RandomStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::complex<double> RandomStream::complex_normal(double variance) noexcept {
    const double scale = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {scale * re, scale * im};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    RandomStream rng(seed, stream_id, StreamDomain::seed_derivation);
    return rng.next_u64();
}

} // namespace tomosar
