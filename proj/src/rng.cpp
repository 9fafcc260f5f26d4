#include "iform/rng.hpp"

#include <cmath>

namespace iform {

double Rng::gaussian() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    // Box-Muller; u1 in (0,1] to keep the log finite.
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
}

Rng Rng::stream(std::uint64_t seed, std::string_view purpose, std::uint64_t a, std::uint64_t b) {
    // FNV-1a over the purpose string, then mix in seed and extras through
    // splitmix64-style finalizers.
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    };
    h = mix(h ^ mix(seed));
    h = mix(h ^ mix(a + 0x9E3779B97F4A7C15ull));
    h = mix(h ^ mix(b + 0x2545F4914F6CDD1Dull));
    return Rng(h);
}

}  // namespace iform
