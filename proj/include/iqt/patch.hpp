#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/volume.hpp"

namespace iqt {

/// Cubic patch geometry plus the background-exclusion rule used when building
/// training libraries.
struct PatchSpec {
    std::size_t size_m = 5;
    std::size_t overlap_p = 0;
    float background_threshold = 0.05f;
    double background_fraction_max = 0.8;

    std::size_t stride() const { return size_m - overlap_p; }
    std::size_t voxels() const { return size_m * size_m * size_m; }

    void validate() const {
        if (size_m == 0) throw GeometryError("patch size must be positive");
        if (overlap_p >= size_m) throw GeometryError("patch overlap must be smaller than the patch size");
        if (!(background_fraction_max >= 0.0 && background_fraction_max <= 1.0)) {
            throw ParameterError("background_fraction_max must lie in [0, 1]");
        }
    }
};

struct Patch {
    Index3 origin{0, 0, 0};
    std::vector<float> values;
    double mean_mu = 0.0;
};

/// Origins along one axis: 0, stride, 2*stride, ... with the final origin
/// clamped so the last patch ends exactly at the boundary.
inline std::vector<std::size_t> axis_origins(std::size_t n, std::size_t size, std::size_t stride) {
    if (size > n) {
        throw GeometryError("patch size " + std::to_string(size) + " exceeds axis length " + std::to_string(n));
    }
    std::vector<std::size_t> out;
    std::size_t o = 0;
    while (o + size < n) {
        out.push_back(o);
        o += stride;
    }
    const std::size_t last = n - size;
    if (out.empty() || out.back() != last) out.push_back(last);
    return out;
}

/// All patch origins in lexicographic (i, j, k) order.
inline std::vector<Index3> patch_origins(const Dims& dims, const PatchSpec& spec) {
    spec.validate();
    const auto oi = axis_origins(dims[0], spec.size_m, spec.stride());
    const auto oj = axis_origins(dims[1], spec.size_m, spec.stride());
    const auto ok = axis_origins(dims[2], spec.size_m, spec.stride());
    std::vector<Index3> out;
    out.reserve(oi.size() * oj.size() * ok.size());
    for (std::size_t i : oi)
        for (std::size_t j : oj)
            for (std::size_t k : ok) out.push_back({i, j, k});
    return out;
}

/// Copies the size_m^3 block at `origin` (k-fastest) into `out`.
inline void gather_patch(const Volume3D& vol, const Index3& origin, std::size_t size_m, std::span<float> out) {
    const auto& d = vol.dims();
    for (int a = 0; a < 3; ++a) {
        if (origin[a] + size_m > d[a]) throw GeometryError("patch extends beyond the volume");
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i < size_m; ++i)
        for (std::size_t j = 0; j < size_m; ++j) {
            const float* row = vol.data().data() + vol.offset(origin[0] + i, origin[1] + j, origin[2]);
            for (std::size_t k = 0; k < size_m; ++k) out[n++] = row[k];
        }
}

inline Patch make_patch(const Volume3D& vol, const Index3& origin, std::size_t size_m) {
    Patch p;
    p.origin = origin;
    p.values.resize(size_m * size_m * size_m);
    gather_patch(vol, origin, size_m, p.values);
    double sum = 0.0;
    for (float v : p.values) sum += v;
    p.mean_mu = sum / static_cast<double>(p.values.size());
    return p;
}

inline std::vector<Patch> extract_patches(const Volume3D& vol, const PatchSpec& spec) {
    std::vector<Patch> out;
    for (const auto& o : patch_origins(vol.dims(), spec)) out.push_back(make_patch(vol, o, spec.size_m));
    return out;
}

/// Fraction of patch voxels strictly below `threshold`.
inline double background_fraction(std::span<const float> values, float threshold) {
    if (values.empty()) return 0.0;
    std::size_t below = 0;
    for (float v : values) below += (v < threshold) ? 1 : 0;
    return static_cast<double>(below) / static_cast<double>(values.size());
}

inline double background_fraction(const Patch& patch, float threshold) {
    return background_fraction(std::span<const float>(patch.values), threshold);
}

/// Accumulates overlapping patch contributions and averages them with
/// uniform weights.
class PatchAccumulator {
public:
    PatchAccumulator(const Dims& dims, std::size_t size_m)
        : dims_(dims), size_m_(size_m), sum_(voxel_count(dims), 0.0), count_(voxel_count(dims), 0) {}

    void add(const Index3& origin, std::span<const float> values) {
        for (int a = 0; a < 3; ++a) {
            if (origin[a] + size_m_ > dims_[a]) throw GeometryError("patch extends beyond the output volume");
        }
        if (values.size() != size_m_ * size_m_ * size_m_) throw GeometryError("patch value count mismatch");
        std::size_t n = 0;
        for (std::size_t i = 0; i < size_m_; ++i)
            for (std::size_t j = 0; j < size_m_; ++j) {
                std::size_t off = ((origin[0] + i) * dims_[1] + (origin[1] + j)) * dims_[2] + origin[2];
                for (std::size_t k = 0; k < size_m_; ++k, ++off, ++n) {
                    sum_[off] += static_cast<double>(values[n]);
                    count_[off] += 1;
                }
            }
    }

    const std::vector<std::uint32_t>& counts() const { return count_; }

    /// Voxels never covered by a patch are left at zero.
    Volume3D finish(const Spacing& spacing = {1.0f, 1.0f, 1.0f}) const {
        std::vector<float> out(sum_.size(), 0.0f);
        for (std::size_t n = 0; n < out.size(); ++n) {
            if (count_[n] > 0) out[n] = static_cast<float>(sum_[n] / static_cast<double>(count_[n]));
        }
        return Volume3D(dims_, std::move(out), spacing);
    }

private:
    Dims dims_;
    std::size_t size_m_;
    std::vector<double> sum_;
    std::vector<std::uint32_t> count_;
};

inline Volume3D reconstruct_from_patches(const std::vector<Patch>& patches, const Dims& dims, const PatchSpec& spec,
                                         const Spacing& spacing = {1.0f, 1.0f, 1.0f}) {
    spec.validate();
    PatchAccumulator acc(dims, spec.size_m);
    for (const auto& p : patches) acc.add(p.origin, p.values);
    return acc.finish(spacing);
}

} // namespace iqt
