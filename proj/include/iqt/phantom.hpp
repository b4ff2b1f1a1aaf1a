#pragma once

// Procedural T1w-like brain phantoms: a GM head ellipsoid, a WM core made of
// a union of random rotated ellipsoids inside an eroded head, and a few deep
// GM islands inside the WM. Intensities are exactly the class means.

#include <Eigen/Geometry>

#include <cstdint>
#include <random>
#include <vector>

#include "iqt/degrade.hpp"
#include "iqt/error.hpp"
#include "iqt/random.hpp"
#include "iqt/volume.hpp"

namespace iqt {

struct PhantomSpec {
    Dims dims{32, 32, 32};
    float background = 0.0f;
    float gm_mean = 0.6f;
    float wm_mean = 1.0f;
    std::size_t ellipsoid_count = 6;
    /// Semi-axis range of the random WM ellipsoids, as fractions of min(dims).
    double radius_min = 0.08;
    double radius_max = 0.22;
    std::size_t deep_gm_count = 2;
    std::uint64_t seed = 0;

    void validate() const {
        for (std::size_t d : dims) {
            if (d < 16) throw ParameterError("phantom dims must be >= 16 per axis");
        }
        if (!(wm_mean > gm_mean && gm_mean > background && background >= 0.0f)) {
            throw ParameterError("phantom class means must satisfy wm > gm > background >= 0");
        }
        if (!(radius_min > 0.0 && radius_max >= radius_min)) throw ParameterError("bad phantom radius range");
    }
};

struct Phantom {
    Volume3D volume;
    TissueMasks tissue;
};

namespace detail {

struct Ellipsoid {
    Eigen::Vector3d center;
    Eigen::Vector3d semi_axes;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

    bool contains(const Eigen::Vector3d& p, double scale = 1.0) const {
        const Eigen::Vector3d q = rotation.transpose() * (p - center);
        return (q.array() / (semi_axes.array() * scale)).square().sum() <= 1.0;
    }
};

inline Eigen::Matrix3d random_rotation(Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
    Eigen::Vector3d axis(n01(rng), n01(rng), n01(rng));
    if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
    return Eigen::AngleAxisd(angle(rng), axis.normalized()).toRotationMatrix();
}

} // namespace detail

inline Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    const Eigen::Vector3d extent(static_cast<double>(spec.dims[0]), static_cast<double>(spec.dims[1]),
                                 static_cast<double>(spec.dims[2]));
    const double min_dim = extent.minCoeff();

    detail::Ellipsoid head;
    head.center = extent / 2.0 - Eigen::Vector3d::Constant(0.5);
    for (int a = 0; a < 3; ++a) {
        head.center(a) += uniform(-0.03, 0.03) * extent(a);
        head.semi_axes(a) = 0.44 * extent(a) * uniform(0.95, 1.05);
    }
    constexpr double kCortexScale = 0.8;

    std::vector<detail::Ellipsoid> wm;
    detail::Ellipsoid core;
    core.center = head.center;
    core.semi_axes = head.semi_axes * 0.5;
    for (int a = 0; a < 3; ++a) core.semi_axes(a) *= uniform(0.85, 1.1);
    core.rotation = detail::random_rotation(rng);
    wm.push_back(core);
    for (std::size_t e = 0; e < spec.ellipsoid_count; ++e) {
        detail::Ellipsoid el;
        Eigen::Vector3d offset;
        do {
            offset = Eigen::Vector3d(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
        } while (offset.squaredNorm() > 1.0);
        el.center = head.center + 0.55 * offset.cwiseProduct(head.semi_axes);
        for (int a = 0; a < 3; ++a) el.semi_axes(a) = uniform(spec.radius_min, spec.radius_max) * min_dim;
        el.rotation = detail::random_rotation(rng);
        wm.push_back(el);
    }
    std::vector<detail::Ellipsoid> deep_gm;
    for (std::size_t e = 0; e < spec.deep_gm_count; ++e) {
        detail::Ellipsoid el;
        el.center = head.center;
        for (int a = 0; a < 3; ++a) {
            el.center(a) += uniform(-0.15, 0.15) * head.semi_axes(a);
            el.semi_axes(a) = uniform(0.05, 0.09) * min_dim;
        }
        el.rotation = detail::random_rotation(rng);
        deep_gm.push_back(el);
    }

    Phantom out{Volume3D(spec.dims, spec.background), {Mask(spec.dims), Mask(spec.dims)}};
    for (std::size_t i = 0; i < spec.dims[0]; ++i)
        for (std::size_t j = 0; j < spec.dims[1]; ++j)
            for (std::size_t k = 0; k < spec.dims[2]; ++k) {
                const Eigen::Vector3d p(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
                if (!head.contains(p)) continue;
                const std::size_t off = out.volume.offset(i, j, k);
                bool is_wm = false;
                if (head.contains(p, kCortexScale)) {
                    for (const auto& el : wm) {
                        if (el.contains(p)) {
                            is_wm = true;
                            break;
                        }
                    }
                    for (const auto& el : deep_gm) {
                        if (is_wm && el.contains(p)) is_wm = false;
                    }
                }
                if (is_wm) {
                    out.volume.data()[off] = spec.wm_mean;
                    out.tissue.wm.labels[off] = 1;
                } else {
                    out.volume.data()[off] = spec.gm_mean;
                    out.tissue.gm.labels[off] = 1;
                }
            }
    return out;
}

} // namespace iqt
