#pragma once

#include "dle/types.hpp"

#include <cstdint>
#include <random>

namespace dle {

/// SplitMix64 finalizer. Used for all seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Combines a seed with a salt into an independent stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    return mix64(mix64(seed) ^ mix64(salt + 0x632BE59BD9B4E019ULL));
}

/// Per-node stream seed, keyed by (master seed, node id) so that churn
/// bookkeeping never perturbs any other node's draws.
constexpr std::uint64_t node_stream_seed(std::uint64_t master_seed, NodeId id) noexcept {
    return derive_seed(master_seed, to_underlying(id));
}

/// Deterministic random stream. Only raw 64-bit outputs of mt19937_64 are
/// consumed; all distributions are derived here so that results do not depend
/// on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Top `bits` bits of one output, bits in [1, 64].
    std::uint64_t next_bits(unsigned bits) { return engine_() >> (64U - bits); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double next_unit() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

    /// Uniform on [lo, hi], inclusive, by masked rejection.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
};

} // namespace dle
