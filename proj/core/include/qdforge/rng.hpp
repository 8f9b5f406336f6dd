#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace qdforge {

/// 64-bit FNV-1a over the raw bytes of `bytes`.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// A labeled, reproducible random stream.
///
/// Streams are derived from (seed, label) and count every 64-bit word they
/// consume, so a stream can be checkpointed as (seed, label, draws) and
/// restored exactly with `restore`. Distributions are built directly on raw
/// engine words.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string label);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& label() const noexcept { return label_; }
    std::uint64_t draws() const noexcept { return draws_; }

    std::uint64_t next_u64();

    /// Uniform integer in [0, n). Requires n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform real in [0, 1) with 53 bits of resolution.
    double uniform01();

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes exactly two words.
    double normal();

    /// `count` distinct values from [0, n) (Floyd's algorithm). The output
    /// order is deterministic for a given stream state.
    std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::uint64_t count);

    /// Rebuilds the stream and fast-forwards it by `draws` words.
    static RngStream restore(std::uint64_t seed, std::string label, std::uint64_t draws);

private:
    std::uint64_t seed_;
    std::string label_;
    std::uint64_t draws_ = 0;
    std::mt19937_64 engine_;
};

/// Derives an independent stream for one concern (codebook, init, mutation...).
/// Throws std::invalid_argument on an empty label.
RngStream derive_stream(std::uint64_t master_seed, std::string_view label);

}  // namespace qdforge
