#pragma once

#include <cstdint>
#include <random>

namespace chr {

// splitmix64; used to derive independent stream seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return mix_seed(root ^ mix_seed(stream));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform01(std::mt19937_64& g) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(g);
}

}  // namespace chr
