#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "gatlab/common.hpp"

namespace gatlab {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Splittable deterministic generator: the (seed, stream_id) pair fully
/// determines the sequence, independent of whatever other streams exist.
/// Each parallel worker owns one stream; trial t always maps to stream t,
/// so results do not depend on scheduling order.
///
/// Core is xoshiro256++ with state derived from (seed, stream_id) via
/// splitmix64. Output uses only 64-bit integer arithmetic, so sequences are
/// identical across platforms for the same build.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t x = seed;
        // fold the stream id in through two tempering rounds so that nearby
        // (seed, stream) pairs land far apart in state space
        x ^= detail::rotl(stream_id * 0xD2B74407B1CE6E93ULL + 0xCA5A826395121157ULL, 23);
        for (auto& w : s_) w = detail::splitmix64(x);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro requires nonzero state
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log argument.
    double next_double_open0() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    /// Standard normal draw, Box-Muller pairs with one value cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_double_open0();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Each coordinate is mean[k] + sigma * g with g standard normal.
/// sigma = 0 returns the mean vector exactly.
inline Vec sample_gaussian_vector(std::span<const double> mean, double sigma, RngStream& rng) {
    if (!(sigma >= 0.0)) throw std::domain_error("sample_gaussian_vector: sigma must be >= 0");
    if (mean.empty()) throw std::domain_error("sample_gaussian_vector: dimension must be >= 1");
    Vec out(mean.begin(), mean.end());
    if (sigma == 0.0) return out;
    for (double& x : out) x += sigma * rng.next_gaussian();
    return out;
}

}  // namespace gatlab
