#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/volume.hpp"

namespace iqt {

/// sqrt(mean((x - xhat)^2)) / max(x), over every voxel.
inline double nrmse(const Volume3D& x, const Volume3D& xhat) {
    require_same_dims(x, xhat, "nrmse");
    const double peak = x.max_value();
    if (!(peak > 0.0)) throw MetricError("nrmse undefined: ground-truth maximum is not positive");
    double sq = 0.0;
    const auto a = x.data();
    const auto b = xhat.data();
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double d = static_cast<double>(a[n]) - static_cast<double>(b[n]);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(a.size())) / peak;
}

struct SsimOptions {
    std::size_t window = 7;
    /// Dynamic range L; <= 0 means max(x).
    double data_range = 0.0;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// SSIM index of one window given its first and second moments
/// (population normalisation).
inline double ssim_term(double mu_x, double mu_y, double var_x, double var_y, double cov_xy, double c1, double c2) {
    return ((2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)) /
           ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
}

namespace detail {

/// Inclusive-exclusive 3D prefix sums, (n_i+1)(n_j+1)(n_k+1) entries.
class SummedVolume {
public:
    template <typename F>
    SummedVolume(const Dims& d, F&& value) : d_(d), s_((d[0] + 1) * (d[1] + 1) * (d[2] + 1), 0.0) {
        for (std::size_t i = 1; i <= d[0]; ++i)
            for (std::size_t j = 1; j <= d[1]; ++j)
                for (std::size_t k = 1; k <= d[2]; ++k) {
                    at(i, j, k) = value(i - 1, j - 1, k - 1) + at(i - 1, j, k) + at(i, j - 1, k) + at(i, j, k - 1) -
                                  at(i - 1, j - 1, k) - at(i - 1, j, k - 1) - at(i, j - 1, k - 1) +
                                  at(i - 1, j - 1, k - 1);
                }
    }

    /// Sum over [i, i+w) x [j, j+w) x [k, k+w).
    double box(std::size_t i, std::size_t j, std::size_t k, std::size_t w) const {
        const std::size_t I = i + w, J = j + w, K = k + w;
        return get(I, J, K) - get(i, J, K) - get(I, j, K) - get(I, J, k) + get(i, j, K) + get(i, J, k) + get(I, j, k) -
               get(i, j, k);
    }

private:
    double& at(std::size_t i, std::size_t j, std::size_t k) { return s_[(i * (d_[1] + 1) + j) * (d_[2] + 1) + k]; }
    double get(std::size_t i, std::size_t j, std::size_t k) const { return s_[(i * (d_[1] + 1) + j) * (d_[2] + 1) + k]; }

    Dims d_;
    std::vector<double> s_;
};

} // namespace detail

/// Mean SSIM over every valid position of a cubic uniform window.
inline double ssim(const Volume3D& x, const Volume3D& y, const SsimOptions& opt = {}) {
    require_same_dims(x, y, "ssim");
    const Dims& d = x.dims();
    const std::size_t w = opt.window;
    if (w == 0 || w > d[0] || w > d[1] || w > d[2]) throw GeometryError("ssim: window larger than the volume");
    const double L = opt.data_range > 0.0 ? opt.data_range : static_cast<double>(x.max_value());
    const double c1 = (opt.k1 * L) * (opt.k1 * L);
    const double c2 = (opt.k2 * L) * (opt.k2 * L);

    auto X = [&](std::size_t i, std::size_t j, std::size_t k) { return static_cast<double>(x(i, j, k)); };
    auto Y = [&](std::size_t i, std::size_t j, std::size_t k) { return static_cast<double>(y(i, j, k)); };
    const detail::SummedVolume sx(d, X);
    const detail::SummedVolume sy(d, Y);
    const detail::SummedVolume sxx(d, [&](auto i, auto j, auto k) { return X(i, j, k) * X(i, j, k); });
    const detail::SummedVolume syy(d, [&](auto i, auto j, auto k) { return Y(i, j, k) * Y(i, j, k); });
    const detail::SummedVolume sxy(d, [&](auto i, auto j, auto k) { return X(i, j, k) * Y(i, j, k); });

    const double n = static_cast<double>(w * w * w);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i + w <= d[0]; ++i)
        for (std::size_t j = 0; j + w <= d[1]; ++j)
            for (std::size_t k = 0; k + w <= d[2]; ++k) {
                const double mx = sx.box(i, j, k, w) / n;
                const double my = sy.box(i, j, k, w) / n;
                const double vx = std::max(0.0, sxx.box(i, j, k, w) / n - mx * mx);
                const double vy = std::max(0.0, syy.box(i, j, k, w) / n - my * my);
                const double cxy = sxy.box(i, j, k, w) / n - mx * my;
                total += ssim_term(mx, my, vx, vy, cxy, c1, c2);
                ++count;
            }
    return total / static_cast<double>(count);
}

inline Volume3D abs_error_map(const Volume3D& x, const Volume3D& xhat) {
    require_same_dims(x, xhat, "abs_error_map");
    Volume3D out(x.dims(), 0.0f, x.spacing());
    for (std::size_t n = 0; n < x.size(); ++n) out.data()[n] = std::abs(x.data()[n] - xhat.data()[n]);
    return out;
}

/// 1 where est_a is strictly closer to x than est_b, else 0.
inline Volume3D binary_improvement_map(const Volume3D& x, const Volume3D& est_a, const Volume3D& est_b) {
    require_same_dims(x, est_a, "binary_improvement_map");
    require_same_dims(x, est_b, "binary_improvement_map");
    Volume3D out(x.dims(), 0.0f, x.spacing());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const float ea = std::abs(x.data()[n] - est_a.data()[n]);
        const float eb = std::abs(x.data()[n] - est_b.data()[n]);
        out.data()[n] = ea < eb ? 1.0f : 0.0f;
    }
    return out;
}

} // namespace iqt
