#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace msm {

using Rng = std::mt19937_64;

/// Named, indexed sub-stream of a root seed. The same (root, name, index)
/// always yields the same engine state, independent of thread scheduling.
Rng make_stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0);

/// Derive a child seed; used to hand a stream to a nested component.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0);

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
    // 53-bit mantissa, shifted by half an ulp so 0 is never returned.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace msm
