#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace constmoran {

// splitmix64 finalizer, used to spread seeds into independent streams.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return mix64(master ^ mix64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept {
    return derive_seed(derive_seed(master, a), b);
}

// FNV-1a over the byte image of a value vector. Resample streams are keyed by
// field contents, so identical inputs reproduce identical resamples while
// distinct fields get independent streams.
inline std::uint64_t hash_values(std::span<const double> xs) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : xs) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

// mt19937_64 with hand-rolled draws. std::*_distribution output is
// implementation-defined; these are not, so a seed pins the byte-exact stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() noexcept {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one draw per call keeps the stream
    // position a pure function of the call count.
    double gaussian() noexcept {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Uniform in [0, n). Lemire multiply-shift; bias is O(n / 2^64).
    std::size_t below(std::size_t n) noexcept {
        const auto wide = static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(n);
        return static_cast<std::size_t>(wide >> 64);
    }

    // Two distinct indices in [0, n), n >= 2.
    std::pair<std::size_t, std::size_t> distinct_pair(std::size_t n) noexcept {
        const std::size_t a = below(n);
        std::size_t b = below(n - 1);
        if (b >= a) ++b;
        return {a, b};
    }

    template <typename T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::uint64_t raw() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace constmoran
