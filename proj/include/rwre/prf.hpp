#ifndef RWRE_PRF_HPP
#define RWRE_PRF_HPP

#include <cstdint>

namespace rwre {

/**
 * Counter-based stateless pseudorandom function.
 *
 * Every stochastic draw in the library is a pure function of a 64-bit key
 * chain: prf(seed, tag, word...).  There is no sequential generator state,
 * so any draw can be recomputed in isolation and concurrent evaluation
 * order never matters.
 */
namespace prf {

// splitmix64 finalizer; full-avalanche 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t word) noexcept
{
    return mix64(h ^ (word + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Purpose tags keep independent draw families on disjoint key chains.
enum tag : std::uint64_t {
    tag_env_site     = 0x656e762d73697465ULL,
    tag_env_const    = 0x656e762d636f6e73ULL,
    tag_walk_step    = 0x77616c6b2d737465ULL,
    tag_annealed_env = 0x616e6e2d656e7600ULL,
    tag_annealed_wlk = 0x616e6e2d776c6b00ULL,
    tag_quenched_wlk = 0x7175652d776c6b00ULL,
    tag_orbit        = 0x6f726269742d7531ULL,
    tag_cov_env      = 0x636f762d656e7600ULL,
    tag_validate     = 0x76616c2d73697465ULL,
};

template <class... Words>
constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t t, Words... words) noexcept
{
    std::uint64_t h = mix64(seed ^ t);
    ((h = combine(h, static_cast<std::uint64_t>(words))), ...);
    return mix64(h);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t x) noexcept
{
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

template <class... Words>
constexpr double uniform(std::uint64_t seed, std::uint64_t t, Words... words) noexcept
{
    return to_unit(key(seed, t, words...));
}

} // namespace prf
} // namespace rwre

#endif // RWRE_PRF_HPP
