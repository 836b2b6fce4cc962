// util.hpp — small shared numeric helpers

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace fdi {

// Tolerance scale: max(1, |largest additive term|), so a "relative" tolerance
// keeps its meaning across wildly different parameter regimes.
inline double scale_of(std::initializer_list<double> terms) {
    double s = 1.0;
    for (double v : terms) s = std::max(s, std::abs(v));
    return s;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_append(double v, std::uint64_t h) {
    return fnv1a64(&v, sizeof(v), h);
}

} // namespace fdi
