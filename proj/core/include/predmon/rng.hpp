#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace predmon {

/// 64-bit FNV-1a over a byte range. Used for deriving per-stream seeds and
/// for checkpoint content checksums.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 14695981039346656037ull);

/// Deterministic random source. All distribution math is implemented here
/// (not via std:: distributions, whose output is implementation-defined) so
/// that a seed produces the same stream on every platform and toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Child stream for (seed, name). Streams are independent of the order
    /// in which they are created, which keeps multi-agent runs insensitive
    /// to channel ordering and thread scheduling.
    static Rng stream(std::uint64_t seed, std::string_view name);

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller.
    double normal(double mean = 0.0, double stddev = 1.0);

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace predmon
