#include "msm/random.hpp"

#include <array>

namespace msm {
namespace {

// FNV-1a; std::hash is not stable across library implementations.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view name, std::uint64_t index) {
    return splitmix64(splitmix64(root_seed ^ fnv1a(name)) + index);
}

Rng make_stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index) {
    const std::uint64_t h = fnv1a(name);
    std::array<std::uint32_t, 6> words{
        static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
        static_cast<std::uint32_t>(h),         static_cast<std::uint32_t>(h >> 32),
        static_cast<std::uint32_t>(index),     static_cast<std::uint32_t>(index >> 32)};
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

}  // namespace msm
