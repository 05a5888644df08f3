#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace asymret {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for replicate `index` of the named sub-stream under `root`.
/// Counter-based, so replicate seeds do not depend on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                    std::uint64_t index = 0) noexcept
{
    return splitmix64(splitmix64(root ^ fnv1a(stream)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Thin wrapper over mt19937_64. Uniforms are built from the top 53 bits so
/// they never hit exactly 0 or 1.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() noexcept
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_(engine_); }

    double exponential() noexcept { return -std::log(uniform()); }

    /// Gamma(shape, 1).
    double gamma(double shape)
    {
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(engine_);
    }

    /// Pareto with survival (x/scale)^(-exponent), x >= scale.
    double pareto(double exponent, double scale = 1.0) noexcept
    {
        return scale * std::pow(uniform(), -1.0 / exponent);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace asymret
