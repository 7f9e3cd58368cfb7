#include "psq/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace psq {

std::uint64_t mix64(std::uint64_t x) {
    // SplitMix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

Stream Stream::keyed(std::uint64_t seed, double r, std::uint64_t replication, StreamRole role) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ std::bit_cast<std::uint64_t>(r));
    h = mix64(h ^ (replication * 0xd1b54a32d192ed03ULL));
    h = mix64(h ^ static_cast<std::uint64_t>(role));
    return Stream(h);
}

std::uint64_t Stream::next() {
    ++counter_;
    return mix64(mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL) ^ key_);
}

double Stream::uniform() {
    // (k + 0.5) / 2^53, never 0 or 1
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

}  // namespace psq
