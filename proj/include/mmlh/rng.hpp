#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mmlh {

/// SplitMix64 finalizer; used to derive independent child seeds from a master seed.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `stream` of `master`. Distinct streams never share a
/// sequence, so adding a consumer does not shift any other consumer's draws.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// mt19937_64 with distribution transforms written out here, so draws are
/// identical across standard libraries (std:: distributions are not).
class Rng {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Exponential with the given rate.
    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }
    bool bernoulli(double p) noexcept { return uniform() < p; }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire-style rejection keeps the result unbiased.
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mmlh
