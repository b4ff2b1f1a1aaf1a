#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "iqt/binary_io.hpp"
#include "iqt/error.hpp"

namespace iqt {

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<float, 3>;
using Index3 = std::array<std::size_t, 3>;

inline std::size_t voxel_count(const Dims& d) { return d[0] * d[1] * d[2]; }

inline std::string to_string(const Dims& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

/// Dense 3D scalar field stored k-fastest: offset = (i * n_j + j) * n_k + k.
class Volume3D {
public:
    Volume3D() = default;

    explicit Volume3D(const Dims& dims, float fill = 0.0f, const Spacing& spacing = {1.0f, 1.0f, 1.0f})
        : dims_(dims), spacing_(spacing), data_(voxel_count(dims), fill) {
        validate_shape();
    }

    Volume3D(const Dims& dims, std::vector<float> data, const Spacing& spacing = {1.0f, 1.0f, 1.0f})
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != voxel_count(dims_)) {
            throw GeometryError("volume data length " + std::to_string(data_.size()) +
                                " does not match dims " + to_string(dims_));
        }
    }

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    void set_spacing(const Spacing& s) {
        spacing_ = s;
        validate_shape();
    }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * dims_[1] + j) * dims_[2] + k;
    }

    float& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[offset(i, j, k)]; }
    float operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[offset(i, j, k)]; }

    /// Edge-clamped read with signed coordinates.
    float clamped(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t k) const {
        auto clampi = [](std::ptrdiff_t v, std::size_t n) {
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
        };
        return (*this)(clampi(i, dims_[0]), clampi(j, dims_[1]), clampi(k, dims_[2]));
    }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    std::vector<float>& storage() { return data_; }
    const std::vector<float>& storage() const { return data_; }

    float max_value() const { return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end()); }
    float min_value() const { return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end()); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
    }

    friend bool operator==(const Volume3D&, const Volume3D&) = default;

private:
    void validate_shape() const {
        for (float s : spacing_) {
            if (!(s > 0.0f) || !std::isfinite(s)) throw GeometryError("voxel spacing must be positive");
        }
    }

    Dims dims_{0, 0, 0};
    Spacing spacing_{1.0f, 1.0f, 1.0f};
    std::vector<float> data_;
};

/// Binary label volume (0/1) sharing the Volume3D voxel order.
struct Mask {
    Dims dims{0, 0, 0};
    std::vector<std::uint8_t> labels;

    Mask() = default;
    explicit Mask(const Dims& d) : dims(d), labels(voxel_count(d), 0) {}

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    }
    friend bool operator==(const Mask&, const Mask&) = default;
};

inline Volume3D mask_to_volume(const Mask& m, const Spacing& spacing = {1.0f, 1.0f, 1.0f}) {
    std::vector<float> v(m.labels.begin(), m.labels.end());
    return Volume3D(m.dims, std::move(v), spacing);
}

inline void require_same_dims(const Volume3D& a, const Volume3D& b, const char* what) {
    if (a.dims() != b.dims()) {
        throw GeometryError(std::string(what) + ": dimension mismatch " + to_string(a.dims()) + " vs " +
                            to_string(b.dims()));
    }
}

// ---------------------------------------------------------------------------
// IQV file format (little-endian):
//   "IQV1" | u32 n_i, n_j, n_k | f32 spacing_i, spacing_j, spacing_k | f32 voxels (k-fastest)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kIqvMagic = "IQV1";

inline void write_volume(std::ostream& os, const Volume3D& v) {
    io::write_magic(os, kIqvMagic);
    for (std::size_t d : v.dims()) io::write_u32(os, static_cast<std::uint32_t>(d));
    for (float s : v.spacing()) io::write_f32(os, s);
    for (float x : v.data()) io::write_f32(os, x);
}

inline Volume3D read_volume(std::istream& is) {
    io::expect_magic(is, kIqvMagic);
    Dims dims{};
    for (auto& d : dims) d = io::read_u32(is, "IQV dims");
    Spacing spacing{};
    for (auto& s : spacing) s = io::read_f32(is, "IQV spacing");
    if (voxel_count(dims) == 0) throw FormatError("IQV dims must be positive");
    for (float s : spacing) {
        if (!(s > 0.0f) || !std::isfinite(s)) throw FormatError("IQV spacing must be positive");
    }
    const std::size_t n = voxel_count(dims);
    std::vector<float> data(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        data[idx] = io::read_f32(is, "IQV voxel payload");
        if (!std::isfinite(data[idx])) throw CorruptionError("IQV payload contains a non-finite voxel");
    }
    if (!io::at_end(is)) throw CorruptionError("IQV payload longer than dims imply");
    return Volume3D(dims, std::move(data), spacing);
}

inline void save_volume(const std::filesystem::path& path, const Volume3D& v) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    write_volume(os, v);
    if (!os) throw DataError("write failed for '" + path.string() + "'");
}

inline Volume3D load_volume(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open volume '" + path.string() + "'");
    return read_volume(is);
}

} // namespace iqt
