#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace roommem {

// Network arithmetic precision. 64-bit unless built with ROOMMEM_FLOAT32.
#ifdef ROOMMEM_FLOAT32
using Real = float;
#else
using Real = double;
#endif
inline constexpr bool kSinglePrecision = sizeof(Real) == sizeof(float);

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration or input files; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

inline constexpr const char* kAtLocation = "AtLocation";

// SplitMix64 finalizer, used to derive independent seed streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Portable random source. std::mt19937_64 output is fully specified by the
// standard; the std distributions are not, so the draws are done by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform integer in [lo, hi].
    int between(int lo, int hi) {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform real in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

    const std::mt19937_64& engine() const { return engine_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace roommem
