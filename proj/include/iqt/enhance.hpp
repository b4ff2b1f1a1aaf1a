#pragma once

// Patch-based sparse-representation enhancement of a low-quality volume:
// cubic upsampling, per-patch Lasso coding of the low-quality features over
// d_low, decoding of the high-frequency residual with d_high on top of the
// interpolated patch, and averaging reconstruction of overlapping patches.

#include <Eigen/Dense>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "iqt/coupled_dictionary.hpp"
#include "iqt/error.hpp"
#include "iqt/features.hpp"
#include "iqt/interpolate.hpp"
#include "iqt/lasso.hpp"
#include "iqt/parallel.hpp"
#include "iqt/patch.hpp"

namespace iqt {

struct EnhanceConfig {
    double lambda = 0.01;
    /// Listed among the method's inputs but not used by any step.
    double beta = 0.0;
    /// Test-time overlap; defaults to size_m - 1 (dense).
    std::optional<std::size_t> overlap;
    /// Must match the dictionary when set.
    std::optional<Scale3> scale;
    double tol = 1e-6;
    int max_iter = 1000;
    std::size_t threads = 0;

    void validate() const {
        if (!(lambda > 0.0)) throw ParameterError("enhance: lambda must be > 0");
        if (!(tol > 0.0)) throw ParameterError("enhance: tol must be > 0");
        if (max_iter < 1) throw ParameterError("enhance: max_iter must be >= 1");
    }
};

struct PatchEnhancement {
    std::vector<float> x_patch;
    SparseCode code;
    double kkt_residual = 0.0;
    double mean_mu = 0.0;
    bool converged = true;
};

struct RunReport {
    std::size_t patch_count = 0;
    double mean_nnz = 0.0;
    std::size_t warning_count = 0;
    double max_kkt_residual = 0.0;
    double wall_seconds = 0.0;
    double lambda = 0.0;
    std::size_t overlap = 0;
};

/// Binds a coupled dictionary and a configuration; reusable across volumes.
class Enhancer {
public:
    Enhancer(const CoupledDictionary& dict, const EnhanceConfig& cfg)
        : dict_(&dict), cfg_(cfg), solver_(dict.d_low.atoms) {
        cfg_.validate();
        dict.validate();
        if (cfg_.scale && *cfg_.scale != dict.geometry.scale) {
            throw ParameterError("enhance: configured scale does not match the dictionary");
        }
        const std::size_t m = dict.geometry.size_m;
        overlap_ = cfg_.overlap.value_or(m - 1);
        if (overlap_ >= m) throw ParameterError("enhance: overlap must be smaller than the patch size");
    }

    std::size_t overlap() const { return overlap_; }
    const EnhanceConfig& config() const { return cfg_; }

    /// Codes and decodes the patch at `origin` of the upsampled volume.
    PatchEnhancement enhance_patch(const Volume3D& upsampled, const FeatureVolumes& features, const Index3& origin) const {
        const std::size_t m = dict_->geometry.size_m;
        PatchEnhancement out;
        out.x_patch.resize(m * m * m);
        gather_patch(upsampled, origin, m, out.x_patch);
        double sum = 0.0;
        for (float v : out.x_patch) sum += v;
        out.mean_mu = sum / static_cast<double>(out.x_patch.size());

        const Eigen::VectorXd f = features.gather(origin, m);
        const Eigen::VectorXd p = dict_->pca.project(f);
        const Eigen::VectorXd corr = dict_->d_low.atoms.transpose() * p;
        LassoOptions lo;
        lo.tol = cfg_.tol;
        lo.max_iter = cfg_.max_iter;
        LassoResult lr = solver_.solve_correlations(corr, p.squaredNorm(), cfg_.lambda, lo);
        out.kkt_residual = lr.kkt_residual;
        out.converged = lr.converged();
        if (!lr.code.empty()) {
            const Eigen::VectorXd x = lr.code.decode(dict_->d_high);
            for (std::size_t n = 0; n < out.x_patch.size(); ++n) {
                out.x_patch[n] = static_cast<float>(static_cast<double>(out.x_patch[n]) + x(static_cast<Eigen::Index>(n)));
            }
        }
        out.code = std::move(lr.code);
        return out;
    }

    Volume3D enhance(const Volume3D& low, RunReport* report = nullptr) const {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t m = dict_->geometry.size_m;
        const Scale3& s = dict_->geometry.scale;
        for (int a = 0; a < 3; ++a) {
            if (low.dims()[a] * s[a] < m) throw GeometryError("enhance: upsampled volume smaller than the patch size");
        }
        const Volume3D up = upsample_cubic(low, s);
        const FeatureVolumes fv(up);
        PatchSpec spec;
        spec.size_m = m;
        spec.overlap_p = overlap_;
        const auto origins = patch_origins(up.dims(), spec);
        const std::size_t m3 = m * m * m;

        std::vector<float> values(origins.size() * m3);
        std::vector<std::uint32_t> nnz(origins.size());
        std::vector<double> kkt(origins.size());
        std::vector<char> converged(origins.size());
        parallel_for(
            origins.size(),
            [&](std::size_t b, std::size_t e) {
                for (std::size_t n = b; n < e; ++n) {
                    PatchEnhancement pe = enhance_patch(up, fv, origins[n]);
                    std::copy(pe.x_patch.begin(), pe.x_patch.end(), values.begin() + static_cast<std::ptrdiff_t>(n * m3));
                    nnz[n] = static_cast<std::uint32_t>(pe.code.nnz());
                    kkt[n] = pe.kkt_residual;
                    converged[n] = pe.converged ? 1 : 0;
                }
            },
            cfg_.threads);

        PatchAccumulator acc(up.dims(), m);
        for (std::size_t n = 0; n < origins.size(); ++n) {
            acc.add(origins[n], std::span<const float>(values.data() + n * m3, m3));
        }
        Volume3D out = acc.finish(up.spacing());

        if (report) {
            report->patch_count = origins.size();
            double total = 0.0;
            report->warning_count = 0;
            report->max_kkt_residual = 0.0;
            for (std::size_t n = 0; n < origins.size(); ++n) {
                total += nnz[n];
                report->warning_count += converged[n] ? 0 : 1;
                report->max_kkt_residual = std::max(report->max_kkt_residual, kkt[n]);
            }
            report->mean_nnz = origins.empty() ? 0.0 : total / static_cast<double>(origins.size());
            report->lambda = cfg_.lambda;
            report->overlap = overlap_;
            report->wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        return out;
    }

private:
    const CoupledDictionary* dict_;
    EnhanceConfig cfg_;
    LassoSolver solver_;
    std::size_t overlap_ = 0;
};

inline Volume3D enhance(const Volume3D& low, const CoupledDictionary& dict, const EnhanceConfig& cfg,
                        RunReport* report = nullptr) {
    return Enhancer(dict, cfg).enhance(low, report);
}

/// Single-patch entry point; recomputes features of the whole upsampled
/// volume, so prefer Enhancer for loops.
inline PatchEnhancement enhance_patch(const Volume3D& upsampled, const Index3& origin, const CoupledDictionary& dict,
                                      const EnhanceConfig& cfg) {
    const Enhancer e(dict, cfg);
    return e.enhance_patch(upsampled, FeatureVolumes(upsampled), origin);
}

inline void write_run_report(const std::filesystem::path& path, const RunReport& r) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write run report '" + path.string() + "'");
    os << "patch_count\t" << r.patch_count << '\n'
       << "mean_nnz\t" << r.mean_nnz << '\n'
       << "solver_warnings\t" << r.warning_count << '\n'
       << "max_kkt_residual\t" << r.max_kkt_residual << '\n'
       << "lambda\t" << r.lambda << '\n'
       << "overlap\t" << r.overlap << '\n'
       << "wall_seconds\t" << r.wall_seconds << '\n';
}

} // namespace iqt
