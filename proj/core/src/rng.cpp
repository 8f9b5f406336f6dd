#include "qdforge/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace qdforge {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::string_view label)
{
    const std::uint64_t h = fnv1a64(label);
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t seed, std::string label)
    : seed_(seed), label_(std::move(label)), engine_(make_engine(seed_, label_))
{
}

std::uint64_t RngStream::next_u64()
{
    ++draws_;
    return engine_();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n)
{
    if (n == 0)
        throw std::invalid_argument("uniform_index: n must be positive");
    // Rejection sampling on the top of the range.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    std::uint64_t x = next_u64();
    while (x > limit)
        x = next_u64();
    return x % n;
}

double RngStream::uniform01()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal()
{
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::uint64_t> RngStream::sample_distinct(std::uint64_t n, std::uint64_t count)
{
    if (count > n)
        throw std::invalid_argument("sample_distinct: count exceeds population");
    std::vector<std::uint64_t> out;
    out.reserve(count);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(count * 2);
    for (std::uint64_t j = n - count; j < n; ++j) {
        const std::uint64_t t = uniform_index(j + 1);
        const std::uint64_t pick = seen.contains(t) ? j : t;
        seen.insert(pick);
        out.push_back(pick);
    }
    return out;
}

RngStream RngStream::restore(std::uint64_t seed, std::string label, std::uint64_t draws)
{
    RngStream s(seed, std::move(label));
    s.engine_.discard(draws);
    s.draws_ = draws;
    return s;
}

RngStream derive_stream(std::uint64_t master_seed, std::string_view label)
{
    if (label.empty())
        throw std::invalid_argument("derive_stream: label must be nonempty");
    return RngStream(master_seed, std::string(label));
}

}  // namespace qdforge
