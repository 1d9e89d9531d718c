#pragma once

#include <cstddef>
#include <limits>

#include "ctxrace/geometry.hpp"
#include "ctxrace/track.hpp"

namespace ctxrace::detail {

/// Index of the closed-loop segment nearest to `p`. With a cache, only a
/// window around the previous answer is searched, falling back to a full scan
/// when the best hit sits on the window edge.
template <typename PointAt>
std::size_t nearest_loop_segment(std::size_t n, PointAt point_at, Vec2 p, ProjectionCache* cache) {
    constexpr std::size_t kWindow = 8;
    constexpr double kMaxStep = 0.5;  // [m] larger moves search the whole loop
    const auto search = [&](std::size_t lo, std::size_t count) {
        std::size_t best = lo % n;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t i = (lo + k) % n;
            const double d = closest_point_on_segment(p, point_at(i), point_at((i + 1) % n)).distance;
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    };
    std::size_t seg;
    if (cache != nullptr && cache->segment && n > 2 * kWindow + 1 && distance(p, cache->last) <= kMaxStep) {
        const std::size_t lo = (*cache->segment + n - kWindow) % n;
        seg = search(lo, 2 * kWindow + 1);
        const std::size_t offset = (seg + n - lo) % n;
        if (offset == 0 || offset == 2 * kWindow) seg = search(0, n);
    } else {
        seg = search(0, n);
    }
    if (cache != nullptr) {
        cache->segment = seg;
        cache->last = p;
    }
    return seg;
}

}  // namespace ctxrace::detail
