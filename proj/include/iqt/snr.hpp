#pragma once

// Bivariate Gaussian over (SNR_GM, SNR_WM) and the regime-constrained
// samplers that define the InD1 / InD2 / OOD test sets.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "iqt/degrade.hpp"
#include "iqt/error.hpp"
#include "iqt/random.hpp"

namespace iqt {

enum class Regime { Train, InD1, InD2, OOD };

inline std::string_view to_string(Regime r) {
    switch (r) {
    case Regime::Train: return "train";
    case Regime::InD1: return "ind1";
    case Regime::InD2: return "ind2";
    case Regime::OOD: return "ood";
    }
    return "?";
}

inline Regime parse_regime(std::string_view s) {
    if (s == "train") return Regime::Train;
    if (s == "ind1") return Regime::InD1;
    if (s == "ind2") return Regime::InD2;
    if (s == "ood") return Regime::OOD;
    throw ParameterError("unknown regime '" + std::string(s) + "' (expected train|ind1|ind2|ood)");
}

struct SnrDistribution {
    Eigen::Vector2d mean{40.0, 60.0};
    Eigen::Matrix2d covariance = (Eigen::Matrix2d() << 25.0, 15.0, 15.0, 25.0).finished();

    /// Lower Cholesky factor; throws ParameterError when not SPD.
    Eigen::Matrix2d cholesky() const {
        if (!covariance.allFinite() || std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12) {
            throw ParameterError("SNR covariance must be symmetric");
        }
        Eigen::LLT<Eigen::Matrix2d> llt(covariance);
        if (llt.info() != Eigen::Success) throw ParameterError("SNR covariance is not positive definite");
        return llt.matrixL();
    }

    static SnrDistribution default_ind() { return {}; }
    static SnrDistribution default_ood() {
        SnrDistribution d;
        d.mean = {12.0, 16.0};
        d.covariance << 4.0, 2.0, 2.0, 4.0;
        return d;
    }
};

inline double mahalanobis(const SnrDistribution& dist, const Eigen::Vector2d& point) {
    const Eigen::Matrix2d L = dist.cholesky();
    const Eigen::Vector2d z = L.triangularView<Eigen::Lower>().solve(point - dist.mean);
    return z.norm();
}

inline double mahalanobis(const SnrDistribution& dist, const SnrPair& p) {
    return mahalanobis(dist, Eigen::Vector2d(p.gm, p.wm));
}

inline constexpr int kMaxSnrRejections = 10000;
inline constexpr double kMinSnr = 1.0;

/// One unconstrained draw from the distribution (no clamping).
inline Eigen::Vector2d draw_gaussian(const Eigen::Matrix2d& chol, const Eigen::Vector2d& mean, Rng& rng) {
    std::normal_distribution<double> std_normal(0.0, 1.0);
    Eigen::Vector2d z;
    z(0) = std_normal(rng);
    z(1) = std_normal(rng);
    return mean + chol * z;
}

/// Rejection-samples an SNR pair satisfying the regime constraint:
///   Train: unconstrained draw from `ind`
///   InD1:  mahalanobis(ind) < 1
///   InD2:  mahalanobis(ind) > 3 and snr_wm > snr_gm
///   OOD:   unconstrained draw from `ood`
/// Components are clamped to at least kMinSnr.
inline SnrPair sample_snr(const SnrDistribution& ind, Regime regime, const SnrDistribution& ood, Rng& rng) {
    const SnrDistribution& dist = (regime == Regime::OOD) ? ood : ind;
    const Eigen::Matrix2d L = dist.cholesky();
    for (int attempt = 0; attempt < kMaxSnrRejections; ++attempt) {
        const Eigen::Vector2d p = draw_gaussian(L, dist.mean, rng);
        const double d = L.triangularView<Eigen::Lower>().solve(p - dist.mean).norm();
        bool ok = true;
        switch (regime) {
        case Regime::InD1: ok = d < 1.0; break;
        case Regime::InD2: ok = d > 3.0 && p(1) > p(0); break;
        case Regime::Train:
        case Regime::OOD: break;
        }
        if (!ok) continue;
        SnrPair out{std::max(p(0), kMinSnr), std::max(p(1), kMinSnr)};
        if (regime == Regime::InD2 && !(out.wm > out.gm)) continue;
        return out;
    }
    throw SamplingError("SNR sampler rejected " + std::to_string(kMaxSnrRejections) +
                        " consecutive draws for regime " + std::string(to_string(regime)));
}

inline SnrPair sample_snr(const SnrDistribution& ind, Regime regime, const SnrDistribution& ood, std::uint64_t seed) {
    Rng rng(seed);
    return sample_snr(ind, regime, ood, rng);
}

} // namespace iqt
