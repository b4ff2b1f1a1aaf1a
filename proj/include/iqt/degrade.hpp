#pragma once

// Forward imaging model for the low-quality acquisition: tissue-contrast
// modulation, separable Gaussian blur, block decimation, additive white
// Gaussian noise on the decimated grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/random.hpp"
#include "iqt/volume.hpp"

namespace iqt {

using Scale3 = std::array<std::size_t, 3>;

struct SnrPair {
    double gm = 0.0;
    double wm = 0.0;
    friend bool operator==(const SnrPair&, const SnrPair&) = default;
};

struct TissueMasks {
    Mask gm;
    Mask wm;
};

struct DegradationParams {
    Scale3 scale{1, 1, 4};
    std::array<double, 3> blur_sigma{0.0, 0.0, 2.0};
    /// Unset means noise-free: no contrast modulation and no additive noise.
    std::optional<SnrPair> snr;
    std::uint64_t noise_seed = 0;

    /// Default anti-aliasing blur: half the decimation factor per axis, with
    /// axes that are not decimated left sharp.
    static std::array<double, 3> default_blur(const Scale3& s) {
        std::array<double, 3> out{};
        for (int a = 0; a < 3; ++a) out[a] = s[a] > 1 ? static_cast<double>(s[a]) / 2.0 : 0.0;
        return out;
    }

    void validate() const {
        for (std::size_t s : scale) {
            if (s < 1) throw ParameterError("scale factors must be >= 1");
        }
        for (double b : blur_sigma) {
            if (!(b >= 0.0) || !std::isfinite(b)) throw ParameterError("blur sigma must be >= 0");
        }
        if (snr && !(snr->gm > 0.0 && snr->wm > 0.0)) throw ParameterError("SNR components must be > 0");
    }
};

/// Normalised discrete Gaussian, radius ceil(3 sigma). sigma == 0 is the
/// identity kernel {1}.
inline std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        w[t + radius] = std::exp(-0.5 * (t * t) / (sigma * sigma));
        sum += w[t + radius];
    }
    for (double& x : w) x /= sum;
    return w;
}

/// Separable Gaussian blur with edge-clamped boundaries.
inline Volume3D gaussian_blur(const Volume3D& in, const std::array<double, 3>& sigma) {
    Volume3D cur = in;
    const Dims& d = in.dims();
    for (int axis = 0; axis < 3; ++axis) {
        if (sigma[axis] <= 0.0) continue;
        const auto w = gaussian_kernel(sigma[axis]);
        const auto radius = static_cast<std::ptrdiff_t>(w.size() / 2);
        Volume3D next(d, 0.0f, in.spacing());
        for (std::size_t i = 0; i < d[0]; ++i)
            for (std::size_t j = 0; j < d[1]; ++j)
                for (std::size_t k = 0; k < d[2]; ++k) {
                    double acc = 0.0;
                    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                        std::array<std::ptrdiff_t, 3> s{static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j),
                                                        static_cast<std::ptrdiff_t>(k)};
                        s[axis] += t;
                        acc += w[t + radius] * static_cast<double>(cur.clamped(s[0], s[1], s[2]));
                    }
                    next(i, j, k) = static_cast<float>(acc);
                }
        cur = std::move(next);
    }
    return cur;
}

/// Block decimation: every output voxel is the mean of an s_i x s_j x s_k cell.
inline Volume3D decimate_mean(const Volume3D& in, const Scale3& scale) {
    const Dims& d = in.dims();
    for (int a = 0; a < 3; ++a) {
        if (scale[a] < 1 || d[a] % scale[a] != 0) {
            throw GeometryError("volume dims " + to_string(d) + " not divisible by the decimation factors");
        }
    }
    Dims out_dims{d[0] / scale[0], d[1] / scale[1], d[2] / scale[2]};
    Spacing sp = in.spacing();
    for (int a = 0; a < 3; ++a) sp[a] *= static_cast<float>(scale[a]);
    Volume3D out(out_dims, 0.0f, sp);
    const double inv = 1.0 / static_cast<double>(scale[0] * scale[1] * scale[2]);
    for (std::size_t i = 0; i < out_dims[0]; ++i)
        for (std::size_t j = 0; j < out_dims[1]; ++j)
            for (std::size_t k = 0; k < out_dims[2]; ++k) {
                double acc = 0.0;
                for (std::size_t a = 0; a < scale[0]; ++a)
                    for (std::size_t b = 0; b < scale[1]; ++b)
                        for (std::size_t c = 0; c < scale[2]; ++c)
                            acc += in(i * scale[0] + a, j * scale[1] + b, k * scale[2] + c);
                out(i, j, k) = static_cast<float>(acc * inv);
            }
    return out;
}

namespace detail {

inline double masked_mean(const Volume3D& x, const Mask& m) {
    if (m.dims != x.dims()) throw GeometryError("tissue mask dims do not match the volume");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t idx = 0; idx < x.size(); ++idx) {
        if (m.labels[idx]) {
            sum += x.data()[idx];
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

inline double foreground_mean(const Volume3D& x) {
    double sum = 0.0;
    std::size_t n = 0;
    for (float v : x.data()) {
        if (v > 0.0f) {
            sum += v;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

} // namespace detail

/// Noise standard deviation implied by the GM SNR: mean GM intensity / snr_gm.
/// Without masks the mean over positive voxels stands in for the GM mean.
inline double noise_sigma(const Volume3D& x, const SnrPair& snr, const TissueMasks* tissue = nullptr) {
    const double gm_mean = tissue ? detail::masked_mean(x, tissue->gm) : detail::foreground_mean(x);
    return gm_mean / snr.gm;
}

/// Y = L H X + W, with the SNR pair also modulating WM contrast so that
/// mean(WM) / sigma_n == snr_wm (only when tissue masks are given).
inline Volume3D degrade(const Volume3D& x, const DegradationParams& params, const TissueMasks* tissue = nullptr) {
    params.validate();
    for (int a = 0; a < 3; ++a) {
        if (x.dims()[a] % params.scale[a] != 0) {
            throw GeometryError("volume dims " + to_string(x.dims()) + " not divisible by scale");
        }
    }
    Volume3D work = x;
    double sigma_n = 0.0;
    if (params.snr) {
        sigma_n = noise_sigma(x, *params.snr, tissue);
        if (tissue) {
            const double wm_mean = detail::masked_mean(x, tissue->wm);
            if (wm_mean > 0.0) {
                const double factor = params.snr->wm * sigma_n / wm_mean;
                auto data = work.data();
                for (std::size_t idx = 0; idx < data.size(); ++idx) {
                    if (tissue->wm.labels[idx]) data[idx] = static_cast<float>(data[idx] * factor);
                }
            }
        }
    }
    Volume3D low = decimate_mean(gaussian_blur(work, params.blur_sigma), params.scale);
    if (params.snr && sigma_n > 0.0) {
        Rng rng(params.noise_seed);
        std::normal_distribution<double> noise(0.0, sigma_n);
        for (float& v : low.data()) v = static_cast<float>(v + noise(rng));
    }
    return low;
}

} // namespace iqt
