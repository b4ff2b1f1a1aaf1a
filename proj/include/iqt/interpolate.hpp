#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/volume.hpp"

namespace iqt {

/// Catmull-Rom cubic convolution kernel (a = -0.5).
inline double catmull_rom(double t) {
    const double x = std::abs(t);
    if (x < 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

/// Continuous input coordinate sampled by output index `o` when upsampling
/// by `factor`. Cell-centred: the centre of each input voxel coincides with
/// the centre of the block of `factor` output voxels it covers.
inline double upsample_source_coordinate(std::size_t o, std::size_t factor) {
    return (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
}

namespace detail {

struct CubicTap {
    std::array<std::size_t, 4> index;
    std::array<double, 4> weight;
};

inline std::vector<CubicTap> cubic_taps(std::size_t n_in, std::size_t factor) {
    std::vector<CubicTap> taps(n_in * factor);
    const auto last = static_cast<std::ptrdiff_t>(n_in) - 1;
    for (std::size_t o = 0; o < taps.size(); ++o) {
        const double x = upsample_source_coordinate(o, factor);
        const double base = std::floor(x);
        const double t = x - base;
        for (int q = 0; q < 4; ++q) {
            const auto src = static_cast<std::ptrdiff_t>(base) - 1 + q;
            taps[o].index[q] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(src, 0, last));
            taps[o].weight[q] = catmull_rom(t - static_cast<double>(q - 1));
        }
    }
    return taps;
}

inline Volume3D upsample_axis(const Volume3D& in, int axis, std::size_t factor) {
    if (factor == 1) return in;
    const Dims& di = in.dims();
    Dims dout = di;
    dout[axis] *= factor;
    Spacing sp = in.spacing();
    sp[axis] /= static_cast<float>(factor);
    Volume3D out(dout, 0.0f, sp);
    const auto taps = cubic_taps(di[axis], factor);
    for (std::size_t i = 0; i < dout[0]; ++i)
        for (std::size_t j = 0; j < dout[1]; ++j)
            for (std::size_t k = 0; k < dout[2]; ++k) {
                Index3 o{i, j, k};
                const CubicTap& tap = taps[o[axis]];
                double acc = 0.0;
                for (int q = 0; q < 4; ++q) {
                    Index3 s = o;
                    s[axis] = tap.index[q];
                    acc += tap.weight[q] * static_cast<double>(in(s[0], s[1], s[2]));
                }
                out(i, j, k) = static_cast<float>(acc);
            }
    return out;
}

} // namespace detail

/// Separable Catmull-Rom upsampling by integer factors with edge-clamped
/// boundary samples. Output dims are input dims times the factors.
inline Volume3D upsample_cubic(const Volume3D& vol, const std::array<std::size_t, 3>& factors) {
    for (std::size_t f : factors) {
        if (f < 1) throw ParameterError("upsampling factors must be >= 1");
    }
    Volume3D out = vol;
    for (int a = 0; a < 3; ++a) out = detail::upsample_axis(out, a, factors[a]);
    return out;
}

/// Nearest-neighbour upsampling (voxel replication).
inline Volume3D upsample_nearest(const Volume3D& vol, const std::array<std::size_t, 3>& factors) {
    const Dims& d = vol.dims();
    Dims dout{d[0] * factors[0], d[1] * factors[1], d[2] * factors[2]};
    Spacing sp = vol.spacing();
    for (int a = 0; a < 3; ++a) sp[a] /= static_cast<float>(factors[a]);
    Volume3D out(dout, 0.0f, sp);
    for (std::size_t i = 0; i < dout[0]; ++i)
        for (std::size_t j = 0; j < dout[1]; ++j)
            for (std::size_t k = 0; k < dout[2]; ++k)
                out(i, j, k) = vol(i / factors[0], j / factors[1], k / factors[2]);
    return out;
}

} // namespace iqt
