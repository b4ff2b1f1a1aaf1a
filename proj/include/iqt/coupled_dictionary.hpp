#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "iqt/binary_io.hpp"
#include "iqt/degrade.hpp"
#include "iqt/error.hpp"
#include "iqt/features.hpp"
#include "iqt/pca.hpp"
#include "iqt/sparse_code.hpp"

namespace iqt {

struct PatchGeometry {
    std::size_t size_m = 5;
    std::size_t overlap_p = 0;
    Scale3 scale{1, 1, 4};
    friend bool operator==(const PatchGeometry&, const PatchGeometry&) = default;
};

/// Low-quality feature dictionary (in PCA-reduced space) and high-frequency
/// dictionary sharing one sparse code per atom.
struct CoupledDictionary {
    Dictionary d_low;
    /// hq_dim x K; columns keep their least-squares scale.
    Eigen::MatrixXd d_high;
    PcaProjection pca;
    PatchGeometry geometry;

    std::size_t atom_count() const { return static_cast<std::size_t>(d_low.atom_count()); }
    std::size_t hq_dim() const { return static_cast<std::size_t>(d_high.rows()); }

    void validate() const {
        if (d_low.atom_count() != d_high.cols()) throw ParameterError("d_low and d_high atom counts differ");
        if (d_low.signal_dim() != pca.reduced_dim()) throw ParameterError("d_low rows differ from PCA reduced dim");
        if (pca.mean.size() != pca.raw_dim()) throw ParameterError("PCA mean length differs from raw dim");
        if (geometry.size_m == 0 || geometry.overlap_p >= geometry.size_m) throw ParameterError("bad patch geometry");
        for (std::size_t s : geometry.scale) {
            if (s < 1) throw ParameterError("bad scale in dictionary geometry");
        }
        const std::size_t m3 = geometry.size_m * geometry.size_m * geometry.size_m;
        if (hq_dim() != m3) throw ParameterError("d_high rows differ from patch voxel count");
        if (static_cast<std::size_t>(pca.raw_dim()) != raw_feature_dim(geometry.size_m)) {
            throw ParameterError("PCA raw dim differs from feature length");
        }
        if (!d_high.allFinite() || !pca.basis.allFinite() || !pca.mean.allFinite()) {
            throw ParameterError("coupled dictionary contains NaN/Inf");
        }
        d_low.validate();
    }
};

/// Rounds every entry to the nearest float so in-memory values equal what the
/// IQD format stores.
inline Eigen::MatrixXd to_float_precision(const Eigen::MatrixXd& m) { return m.cast<float>().cast<double>(); }

// ---------------------------------------------------------------------------
// IQD format (little-endian):
//   "IQD1" | u32 K, raw_feature_dim, reduced_dim, hq_dim, size_m, overlap_p, s_i, s_j, s_k
//   | f32 PCA mean | f32 PCA basis (row-major) | f32 d_low (column-major) | f32 d_high (column-major)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kIqdMagic = "IQD1";

inline void write_dictionary(std::ostream& os, const CoupledDictionary& cd) {
    cd.validate();
    io::write_magic(os, kIqdMagic);
    const auto K = static_cast<std::uint32_t>(cd.atom_count());
    const auto raw = static_cast<std::uint32_t>(cd.pca.raw_dim());
    const auto red = static_cast<std::uint32_t>(cd.pca.reduced_dim());
    const auto hq = static_cast<std::uint32_t>(cd.hq_dim());
    for (std::uint32_t v : {K, raw, red, hq, static_cast<std::uint32_t>(cd.geometry.size_m),
                            static_cast<std::uint32_t>(cd.geometry.overlap_p),
                            static_cast<std::uint32_t>(cd.geometry.scale[0]),
                            static_cast<std::uint32_t>(cd.geometry.scale[1]),
                            static_cast<std::uint32_t>(cd.geometry.scale[2])}) {
        io::write_u32(os, v);
    }
    for (Eigen::Index i = 0; i < cd.pca.mean.size(); ++i) io::write_f32(os, static_cast<float>(cd.pca.mean(i)));
    for (Eigen::Index r = 0; r < cd.pca.basis.rows(); ++r)
        for (Eigen::Index c = 0; c < cd.pca.basis.cols(); ++c) io::write_f32(os, static_cast<float>(cd.pca.basis(r, c)));
    for (Eigen::Index c = 0; c < cd.d_low.atoms.cols(); ++c)
        for (Eigen::Index r = 0; r < cd.d_low.atoms.rows(); ++r) io::write_f32(os, static_cast<float>(cd.d_low.atoms(r, c)));
    for (Eigen::Index c = 0; c < cd.d_high.cols(); ++c)
        for (Eigen::Index r = 0; r < cd.d_high.rows(); ++r) io::write_f32(os, static_cast<float>(cd.d_high(r, c)));
}

inline CoupledDictionary read_dictionary(std::istream& is) {
    io::expect_magic(is, kIqdMagic);
    std::uint32_t h[9];
    for (auto& v : h) v = io::read_u32(is, "IQD header");
    const auto [K, raw, red, hq, size_m, overlap_p, si, sj, sk] = std::to_array(h);
    if (K == 0 || raw == 0 || red == 0 || hq == 0 || size_m == 0 || si == 0 || sj == 0 || sk == 0) {
        throw FormatError("IQD header contains a zero dimension");
    }
    if (static_cast<std::size_t>(hq) != static_cast<std::size_t>(size_m) * size_m * size_m ||
        static_cast<std::size_t>(raw) != raw_feature_dim(size_m) || red > raw || overlap_p >= size_m) {
        throw CorruptionError("IQD header shapes are inconsistent with the patch size");
    }
    CoupledDictionary cd;
    cd.geometry = {size_m, overlap_p, {si, sj, sk}};
    cd.pca.mean.resize(raw);
    for (Eigen::Index i = 0; i < cd.pca.mean.size(); ++i) cd.pca.mean(i) = io::read_f32(is, "IQD PCA mean");
    cd.pca.basis.resize(red, raw);
    for (Eigen::Index r = 0; r < cd.pca.basis.rows(); ++r)
        for (Eigen::Index c = 0; c < cd.pca.basis.cols(); ++c) cd.pca.basis(r, c) = io::read_f32(is, "IQD PCA basis");
    Eigen::MatrixXd dl(red, K);
    for (Eigen::Index c = 0; c < dl.cols(); ++c)
        for (Eigen::Index r = 0; r < dl.rows(); ++r) dl(r, c) = io::read_f32(is, "IQD d_low");
    cd.d_high.resize(hq, K);
    for (Eigen::Index c = 0; c < cd.d_high.cols(); ++c)
        for (Eigen::Index r = 0; r < cd.d_high.rows(); ++r) cd.d_high(r, c) = io::read_f32(is, "IQD d_high");
    if (!io::at_end(is)) throw CorruptionError("IQD payload longer than header implies");
    try {
        cd.d_low = Dictionary(std::move(dl), true);
        cd.validate();
    } catch (const ParameterError& e) {
        throw CorruptionError(std::string("IQD content invalid: ") + e.what());
    }
    return cd;
}

inline void save_dictionary(const std::filesystem::path& path, const CoupledDictionary& cd) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    write_dictionary(os, cd);
    if (!os) throw DataError("write failed for '" + path.string() + "'");
}

inline CoupledDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open dictionary '" + path.string() + "'");
    return read_dictionary(is);
}

} // namespace iqt
