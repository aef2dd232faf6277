#pragma once

#include <cstdint>
#include <random>

namespace epipolicy {

using Rng = std::mt19937_64;

// Independent sub-streams are addressed by (root, tag, index). Every
// stochastic component draws from its own stream so that results do not
// depend on evaluation order or thread count.
enum class StreamTag : std::uint64_t {
    Path = 1,
    Assignment = 2,
    FirstCase = 3,
    Econ = 4,
    Bootstrap = 5,
    Replication = 6,
    Auxiliary = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, StreamTag tag,
                                    std::uint64_t index = 0) noexcept {
    std::uint64_t h = splitmix64(root);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    return splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
}

inline Rng make_stream(std::uint64_t root, StreamTag tag, std::uint64_t index = 0) {
    return Rng(derive_seed(root, tag, index));
}

}  // namespace epipolicy
