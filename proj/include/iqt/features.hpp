#pragma once

// Low-quality feature operator: first- and second-order differences along
// each axis of the cubic-upsampled volume, gathered over a patch footprint.
// Block order is [d/di, d/dj, d/dk, d2/di2, d2/dj2, d2/dk2], each block
// k-fastest over the patch. Boundary neighbours are edge-clamped.

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/volume.hpp"

namespace iqt {

inline constexpr std::size_t kFeatureFilterCount = 6;

/// 3-tap filter taps at offsets -1, 0, +1.
using FilterTaps = std::array<double, 3>;

struct FeatureFilter {
    int axis = 0;
    FilterTaps taps{};
};

/// The fixed filter bank: [-1, 0, 1] gradients then [1, -2, 1] second
/// differences per axis. Every filter sums to zero.
inline const std::array<FeatureFilter, kFeatureFilterCount>& feature_filters() {
    static const std::array<FeatureFilter, kFeatureFilterCount> bank{{
        {0, {-1.0, 0.0, 1.0}},
        {1, {-1.0, 0.0, 1.0}},
        {2, {-1.0, 0.0, 1.0}},
        {0, {1.0, -2.0, 1.0}},
        {1, {1.0, -2.0, 1.0}},
        {2, {1.0, -2.0, 1.0}},
    }};
    return bank;
}

inline double filter_response(const Volume3D& v, const FeatureFilter& f, std::size_t i, std::size_t j, std::size_t k) {
    std::array<std::ptrdiff_t, 3> p{static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j),
                                    static_cast<std::ptrdiff_t>(k)};
    double acc = 0.0;
    for (int t = -1; t <= 1; ++t) {
        const double w = f.taps[t + 1];
        if (w == 0.0) continue;
        auto q = p;
        q[f.axis] += t;
        acc += w * static_cast<double>(v.clamped(q[0], q[1], q[2]));
    }
    return acc;
}

inline std::size_t raw_feature_dim(std::size_t size_m) { return kFeatureFilterCount * size_m * size_m * size_m; }

/// Direct per-patch feature vector (length 6 * size_m^3).
inline Eigen::VectorXd extract_lq_features(const Volume3D& upsampled, const Index3& origin, std::size_t size_m) {
    for (int a = 0; a < 3; ++a) {
        if (origin[a] + size_m > upsampled.dims()[a]) throw GeometryError("feature patch out of bounds");
    }
    const std::size_t m3 = size_m * size_m * size_m;
    Eigen::VectorXd out(static_cast<Eigen::Index>(kFeatureFilterCount * m3));
    const auto& bank = feature_filters();
    for (std::size_t f = 0; f < kFeatureFilterCount; ++f) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < size_m; ++i)
            for (std::size_t j = 0; j < size_m; ++j)
                for (std::size_t k = 0; k < size_m; ++k, ++n)
                    out(static_cast<Eigen::Index>(f * m3 + n)) =
                        filter_response(upsampled, bank[f], origin[0] + i, origin[1] + j, origin[2] + k);
    }
    return out;
}

/// Whole-volume filter responses, computed once so that many overlapping
/// patches can gather features cheaply. Gathered vectors are identical to
/// extract_lq_features.
class FeatureVolumes {
public:
    explicit FeatureVolumes(const Volume3D& upsampled) : dims_(upsampled.dims()) {
        const auto& bank = feature_filters();
        for (std::size_t f = 0; f < kFeatureFilterCount; ++f) {
            responses_[f].resize(voxel_count(dims_));
            std::size_t off = 0;
            for (std::size_t i = 0; i < dims_[0]; ++i)
                for (std::size_t j = 0; j < dims_[1]; ++j)
                    for (std::size_t k = 0; k < dims_[2]; ++k, ++off)
                        responses_[f][off] = filter_response(upsampled, bank[f], i, j, k);
        }
    }

    const Dims& dims() const { return dims_; }

    void gather(const Index3& origin, std::size_t size_m, Eigen::Ref<Eigen::VectorXd> out) const {
        for (int a = 0; a < 3; ++a) {
            if (origin[a] + size_m > dims_[a]) throw GeometryError("feature patch out of bounds");
        }
        const std::size_t m3 = size_m * size_m * size_m;
        if (static_cast<std::size_t>(out.size()) != kFeatureFilterCount * m3) {
            throw GeometryError("feature output length mismatch");
        }
        for (std::size_t f = 0; f < kFeatureFilterCount; ++f) {
            std::size_t n = f * m3;
            for (std::size_t i = 0; i < size_m; ++i)
                for (std::size_t j = 0; j < size_m; ++j) {
                    const std::size_t row = ((origin[0] + i) * dims_[1] + (origin[1] + j)) * dims_[2] + origin[2];
                    for (std::size_t k = 0; k < size_m; ++k) out(static_cast<Eigen::Index>(n++)) = responses_[f][row + k];
                }
        }
    }

    Eigen::VectorXd gather(const Index3& origin, std::size_t size_m) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(raw_feature_dim(size_m)));
        gather(origin, size_m, out);
        return out;
    }

private:
    Dims dims_;
    std::array<std::vector<double>, kFeatureFilterCount> responses_;
};

/// High-frequency target: high-quality patch minus the interpolated patch.
inline Eigen::VectorXd extract_hq_residual(std::span<const float> high_patch, std::span<const float> upsampled_low_patch) {
    if (high_patch.size() != upsampled_low_patch.size()) throw GeometryError("residual: patch length mismatch");
    Eigen::VectorXd out(static_cast<Eigen::Index>(high_patch.size()));
    for (std::size_t n = 0; n < high_patch.size(); ++n) {
        out(static_cast<Eigen::Index>(n)) = static_cast<double>(high_patch[n]) - static_cast<double>(upsampled_low_patch[n]);
    }
    return out;
}

} // namespace iqt
