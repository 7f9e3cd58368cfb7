#pragma once

#include <cstdint>

namespace psq {

/// Role of a random stream inside one replication.
enum class StreamRole : std::uint64_t { arrivals = 1, services = 2, initial = 3, rbm = 4, bootstrap = 5, misc = 6 };

/// Counter-based random stream. Each draw is a strong 64-bit mix of
/// (key, counter), so streams with different keys are independent and every
/// stream has period 2^64.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key) : key_(key) {}

    /// Stream keyed by (experiment seed, r, replication, role).
    static Stream keyed(std::uint64_t seed, double r, std::uint64_t replication, StreamRole role);

    std::uint64_t next();
    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Standard normal via Box-Muller (cached pair).
    double normal();

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace psq
