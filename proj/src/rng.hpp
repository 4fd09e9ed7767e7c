#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace sardet {

/// splitmix64 generator: seedable, fast, and identical on every platform,
/// which is what keeps scenes and training runs bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next_u64()); // full 64-bit span
        const auto wide = static_cast<unsigned __int128>(next_u64()) * range;
        return lo + static_cast<std::int64_t>(wide >> 64);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double exponential(double mean) { return -mean * std::log1p(-next_double()); }

    /// Gamma with integer shape (Erlang): sum of `shape` exponentials with
    /// scale mean/shape. Exact for the L-look speckle model used here.
    double gamma_int(int shape, double mean) {
        const double scale = mean / shape;
        double sum = 0.0;
        for (int i = 0; i < shape; ++i) sum += exponential(scale);
        return sum;
    }

    /// Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(next_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent stream derived from a base seed; per-band clutter and
    /// vessel layout draw from separate streams.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        Rng r(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

} // namespace sardet
