#pragma once

// Local four-point (cubic) Lagrange interpolation on uniform grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace blowup {

struct CubicValue {
    double value = 0.0;
    double derivative = 0.0;
};

enum class EdgeRule {
    clamp,   ///< one-sided stencils at the ends (extrapolates outside)
    mirror,  ///< even reflection about the first node (radial symmetry axis)
};

/// Interpolates samples f_i = f(x0 + i h) at x.  The stencil is the four nodes
/// around x; near the ends it is shifted inward (clamp) or reflected (mirror).
inline CubicValue cubic_sample(std::span<const double> f, double x0, double h, double x,
                               EdgeRule edge = EdgeRule::clamp)
{
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    const double pos = (x - x0) / h;
    auto i = static_cast<std::ptrdiff_t>(std::floor(pos));
    std::ptrdiff_t first = i - 1;
    if (edge == EdgeRule::clamp) first = std::clamp<std::ptrdiff_t>(first, 0, n - 4);
    else first = std::min<std::ptrdiff_t>(first, n - 4);
    const double t = pos - double(first); // local coordinate, nodes at 0,1,2,3

    auto at = [&](std::ptrdiff_t k) {
        std::ptrdiff_t j = first + k;
        if (j < 0) j = -j;
        return f[static_cast<std::size_t>(j)];
    };
    const double f0 = at(0), f1 = at(1), f2 = at(2), f3 = at(3);
    const double d0 = t, d1 = t - 1, d2 = t - 2, d3 = t - 3;
    const double l0 = -d1 * d2 * d3 / 6.0;
    const double l1 = d0 * d2 * d3 / 2.0;
    const double l2 = -d0 * d1 * d3 / 2.0;
    const double l3 = d0 * d1 * d2 / 6.0;
    const double dl0 = -(d2 * d3 + d1 * d3 + d1 * d2) / 6.0;
    const double dl1 = (d2 * d3 + d0 * d3 + d0 * d2) / 2.0;
    const double dl2 = -(d1 * d3 + d0 * d3 + d0 * d1) / 2.0;
    const double dl3 = (d1 * d2 + d0 * d2 + d0 * d1) / 6.0;
    return {l0 * f0 + l1 * f1 + l2 * f2 + l3 * f3,
            (dl0 * f0 + dl1 * f1 + dl2 * f2 + dl3 * f3) / h};
}

} // namespace blowup
