#include "predmon/rng.hpp"

#include <cmath>

namespace predmon {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = basis;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

Rng Rng::stream(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = fnv1a64(&seed, sizeof(seed));
    h = fnv1a64(name.data(), name.size(), h);
    return Rng(h);
}

double Rng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double Rng::normal(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + stddev * radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

}  // namespace predmon
