#pragma once

#include <cstdint>
#include <string_view>

namespace iform {

// Deterministic, platform-independent PRNG (splitmix64). Every random choice
// in the project derives from one root seed through named streams so that
// adding a new consumer never perturbs existing streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Standard normal via Box-Muller; second value cached.
    double gaussian();

    // Fisher-Yates over indices [0, n).
    template <typename T>
    void shuffle(T* data, std::size_t n) {
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = next_u64() % i;
            T tmp = data[i - 1];
            data[i - 1] = data[j];
            data[j] = tmp;
        }
    }

    // Named sub-stream: hash of (seed, purpose, a, b). Streams with distinct
    // purposes are independent for any fixed root seed.
    static Rng stream(std::uint64_t seed, std::string_view purpose,
                      std::uint64_t a = 0, std::uint64_t b = 0);

private:
    std::uint64_t state_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace iform
