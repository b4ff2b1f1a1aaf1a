#pragma once

// Coupled dictionary training:
//   1. PCA of the low-quality feature vectors,
//   2. K-SVD on the projected features (OMP coding + rank-1 atom updates),
//   3. least-squares high-frequency dictionary sharing the final codes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "iqt/coupled_dictionary.hpp"
#include "iqt/error.hpp"
#include "iqt/features.hpp"
#include "iqt/interpolate.hpp"
#include "iqt/omp.hpp"
#include "iqt/parallel.hpp"
#include "iqt/patch.hpp"
#include "iqt/pca.hpp"
#include "iqt/random.hpp"
#include "iqt/sparse_code.hpp"

namespace iqt {

/// Column n of `features` and column n of `residuals` form one training pair.
struct TrainingSet {
    Eigen::MatrixXd features;   ///< raw_feature_dim x N
    Eigen::MatrixXd residuals;  ///< size_m^3 x N
    std::vector<double> background_fractions;
    std::size_t considered = 0;
    std::size_t excluded = 0;

    std::size_t size() const { return static_cast<std::size_t>(features.cols()); }
};

/// Accumulates (feature, residual) pairs from an aligned volume pair.
/// Background fraction is judged on the high-quality patch; patches above
/// PatchSpec::background_fraction_max are dropped.
class PatchLibraryBuilder {
public:
    PatchLibraryBuilder(const PatchSpec& spec, const Scale3& scale) : spec_(spec), scale_(scale) { spec_.validate(); }

    void add_pair(const Volume3D& high, const Volume3D& low) {
        const Volume3D up = upsample_cubic(low, scale_);
        if (up.dims() != high.dims()) {
            throw GeometryError("upsampled low volume " + to_string(up.dims()) + " does not match high volume " +
                                to_string(high.dims()));
        }
        const FeatureVolumes fv(up);
        const std::size_t m = spec_.size_m;
        std::vector<float> hp(spec_.voxels()), lp(spec_.voxels());
        for (const auto& o : patch_origins(high.dims(), spec_)) {
            ++considered_;
            gather_patch(high, o, m, hp);
            const double bg = background_fraction(std::span<const float>(hp), spec_.background_threshold);
            if (bg > spec_.background_fraction_max) {
                ++excluded_;
                continue;
            }
            gather_patch(up, o, m, lp);
            features_.push_back(fv.gather(o, m));
            residuals_.push_back(extract_hq_residual(hp, lp));
            bg_.push_back(bg);
        }
    }

    std::size_t size() const { return features_.size(); }

    /// Packs the library, keeping a seeded random subset when it exceeds
    /// `max_pairs` (0 = keep all). Subset order follows library order.
    TrainingSet finish(std::size_t max_pairs = 0, std::uint64_t seed = 0) const {
        std::vector<std::size_t> keep(features_.size());
        std::iota(keep.begin(), keep.end(), 0);
        if (max_pairs > 0 && keep.size() > max_pairs) {
            Rng rng(seed);
            std::shuffle(keep.begin(), keep.end(), rng);
            keep.resize(max_pairs);
            std::sort(keep.begin(), keep.end());
        }
        TrainingSet ts;
        ts.considered = considered_;
        ts.excluded = excluded_;
        if (keep.empty()) return ts;
        ts.features.resize(features_.front().size(), static_cast<Eigen::Index>(keep.size()));
        ts.residuals.resize(residuals_.front().size(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) {
            ts.features.col(static_cast<Eigen::Index>(c)) = features_[keep[c]];
            ts.residuals.col(static_cast<Eigen::Index>(c)) = residuals_[keep[c]];
            ts.background_fractions.push_back(bg_[keep[c]]);
        }
        return ts;
    }

private:
    PatchSpec spec_;
    Scale3 scale_;
    std::vector<Eigen::VectorXd> features_;
    std::vector<Eigen::VectorXd> residuals_;
    std::vector<double> bg_;
    std::size_t considered_ = 0;
    std::size_t excluded_ = 0;
};

struct TrainOptions {
    std::size_t k_atoms = 256;
    std::size_t ksvd_iters = 10;
    std::size_t sparsity_t = 3;
    double pca_min_variance = 0.9;
    /// PCA about the origin. The feature operator is zero-DC, so a zero
    /// patch must project to zero.
    bool center_pca = false;
    double ridge = 1e-8;
    std::uint64_t seed = 0;
    PatchGeometry geometry;
    std::size_t threads = 0;
    /// Power-iteration budget for the rank-1 atom update.
    int power_iters = 30;
    /// Per-iteration trial replacement of the least-used atom.
    bool replace_atoms = true;
};

struct TrainResult {
    CoupledDictionary dictionary;
    /// Sum of squared K-SVD representation errors after each iteration.
    std::vector<double> ksvd_objective;
    /// Final sparse codes of the training pairs (over d_low, PCA space).
    std::vector<SparseCode> codes;
    /// Per-pair squared K-SVD residual ||P f - D_low a||^2 at exit.
    std::vector<double> sample_residual_sq;
};

namespace detail {

struct CodeEntry {
    std::uint32_t atom;
    double value;
};
using WorkCode = std::vector<CodeEntry>;

inline double code_error_sq(const Eigen::MatrixXd& D, const Eigen::VectorXd& p, const WorkCode& c) {
    Eigen::VectorXd r = p;
    for (const auto& e : c) r.noalias() -= e.value * D.col(e.atom);
    return r.squaredNorm();
}

} // namespace detail

/// Trains the coupled dictionary on the pairs in `ts`.
inline TrainResult train_coupled(const TrainingSet& ts, const TrainOptions& opt) {
    const auto N = static_cast<Eigen::Index>(ts.size());
    const auto K = static_cast<Eigen::Index>(opt.k_atoms);
    if (N == 0) throw ParameterError("train_coupled: no training pairs");
    if (K == 0) throw ParameterError("train_coupled: k_atoms must be positive");
    if (K > N) throw ParameterError("train_coupled: k_atoms exceeds the number of training pairs");
    if (ts.residuals.cols() != N) throw GeometryError("train_coupled: feature/residual counts differ");
    if (opt.sparsity_t == 0) throw ParameterError("train_coupled: sparsity must be positive");

    TrainResult out;
    PcaProjection pca = fit_pca(ts.features, opt.pca_min_variance, opt.center_pca);
    pca.basis = to_float_precision(pca.basis);
    pca.mean = to_float_precision(pca.mean);
    const Eigen::MatrixXd P = pca.project_columns(ts.features); // r x N
    const Eigen::Index r = P.rows();
    const std::size_t t = std::min<std::size_t>(opt.sparsity_t, static_cast<std::size_t>(std::min(r, K)));

    // Initial atoms: distinct random non-zero samples, random unit vectors
    // when the data run out.
    Rng rng(substream_seed(opt.seed, "ksvd/init"));
    Eigen::MatrixXd D(r, K);
    {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Eigen::Index filled = 0;
        for (Eigen::Index idx : order) {
            if (filled == K) break;
            const double nrm = P.col(idx).norm();
            if (nrm > 1e-12) D.col(filled++) = P.col(idx) / nrm;
        }
        std::normal_distribution<double> n01(0.0, 1.0);
        while (filled < K) {
            Eigen::VectorXd v(r);
            for (Eigen::Index q = 0; q < r; ++q) v(q) = n01(rng);
            D.col(filled++) = v.normalized();
        }
    }

    std::vector<detail::WorkCode> codes(static_cast<std::size_t>(N));
    Eigen::MatrixXd R = P; // residual P - D A
    bool have_codes = false;

    // Sparse coding of every sample. A previous code is kept whenever the
    // fresh OMP code does not beat it, so this step never raises the
    // objective. Refreshes R.
    auto code_all = [&](const Eigen::MatrixXd& Dict, std::vector<detail::WorkCode>& cs, bool keep_better) {
        const OmpSolver solver(Dict);
        parallel_for(
            static_cast<std::size_t>(N),
            [&](std::size_t b, std::size_t e) {
                for (std::size_t n = b; n < e; ++n) {
                    const auto col = static_cast<Eigen::Index>(n);
                    const Eigen::VectorXd p = P.col(col);
                    const SparseCode sc = solver.solve_correlations(Dict.transpose() * p, p.squaredNorm(), t);
                    detail::WorkCode fresh;
                    for (std::size_t q = 0; q < sc.nnz(); ++q) fresh.push_back({sc.indices[q], sc.values[q]});
                    if (keep_better) {
                        const double old_err = detail::code_error_sq(Dict, p, cs[n]);
                        const double new_err = detail::code_error_sq(Dict, p, fresh);
                        if (!(new_err < old_err)) continue;
                    }
                    cs[n] = std::move(fresh);
                }
            },
            opt.threads);
        R = P;
        for (Eigen::Index n = 0; n < N; ++n) {
            for (const auto& e : cs[static_cast<std::size_t>(n)]) R.col(n).noalias() -= e.value * Dict.col(e.atom);
        }
    };

    const std::size_t iters = std::max<std::size_t>(1, opt.ksvd_iters);
    for (std::size_t it = 0; it < iters; ++it) {
        code_all(D, codes, have_codes);
        have_codes = true;

        // --- Atom users.
        std::vector<std::vector<std::pair<Eigen::Index, std::size_t>>> users(static_cast<std::size_t>(K));
        for (Eigen::Index n = 0; n < N; ++n) {
            const auto& c = codes[static_cast<std::size_t>(n)];
            for (std::size_t q = 0; q < c.size(); ++q) users[c[q].atom].push_back({n, q});
        }

        // --- Rank-1 updates. Power iteration started at the current atom:
        // the first step already reproduces the old error, later steps can
        // only lower it.
        std::vector<Eigen::Index> dead;
        std::vector<double> usage(static_cast<std::size_t>(K), 0.0);
        for (Eigen::Index k = 0; k < K; ++k) {
            const auto& u = users[static_cast<std::size_t>(k)];
            if (u.empty()) {
                dead.push_back(k);
                continue;
            }
            const auto nk = static_cast<Eigen::Index>(u.size());
            Eigen::MatrixXd E(r, nk);
            for (Eigen::Index c = 0; c < nk; ++c) {
                const auto [n, q] = u[static_cast<std::size_t>(c)];
                E.col(c) = R.col(n) + codes[static_cast<std::size_t>(n)][q].value * D.col(k);
            }
            Eigen::VectorXd atom = D.col(k);
            Eigen::VectorXd row = E.transpose() * atom;
            double energy = row.squaredNorm();
            for (int pi = 0; pi < opt.power_iters; ++pi) {
                Eigen::VectorXd next = E * row;
                const double nrm = next.norm();
                if (!(nrm > 0.0)) break;
                next /= nrm;
                Eigen::VectorXd next_row = E.transpose() * next;
                const double next_energy = next_row.squaredNorm();
                if (!(next_energy >= energy)) break;
                const double gain = next_energy - energy;
                atom = next;
                row = std::move(next_row);
                energy = next_energy;
                if (gain <= 1e-12 * energy) break;
            }
            D.col(k) = atom;
            usage[static_cast<std::size_t>(k)] = energy;
            for (Eigen::Index c = 0; c < nk; ++c) {
                const auto [n, q] = u[static_cast<std::size_t>(c)];
                codes[static_cast<std::size_t>(n)][q].value = row(c);
                R.col(n) = E.col(c) - row(c) * atom;
            }
        }

        // --- Reseed unused atoms with the worst-represented samples; their
        // coefficients are all zero so the objective is unchanged.
        if (!dead.empty()) {
            std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
            std::iota(order.begin(), order.end(), 0);
            const Eigen::VectorXd err = R.colwise().squaredNorm().transpose();
            std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return err(a) > err(b); });
            std::size_t next = 0;
            for (Eigen::Index k : dead) {
                while (next < order.size() && P.col(order[next]).norm() <= 1e-12) ++next;
                if (next < order.size()) {
                    D.col(k) = P.col(order[next]).normalized();
                    ++next;
                }
            }
        }

        // --- Trial replacement of the least-used atom by the direction of the
        // worst-represented sample's residual; kept only when re-coding lowers
        // the objective.
        if (opt.replace_atoms && dead.empty() && K > 1) {
            const double before = R.squaredNorm();
            Eigen::Index weakest = 0;
            for (Eigen::Index k = 1; k < K; ++k) {
                if (usage[static_cast<std::size_t>(k)] < usage[static_cast<std::size_t>(weakest)]) weakest = k;
            }
            Eigen::Index worst = 0;
            R.colwise().squaredNorm().maxCoeff(&worst);
            const double rn = R.col(worst).norm();
            if (rn > 1e-12) {
                const Eigen::MatrixXd saved_D = D;
                const auto saved_codes = codes;
                const Eigen::MatrixXd saved_R = R;
                D.col(weakest) = R.col(worst) / rn;
                for (auto& c : codes) {
                    for (auto& e : c) {
                        if (static_cast<Eigen::Index>(e.atom) == weakest) e.value = 0.0;
                    }
                }
                code_all(D, codes, true);
                if (!(R.squaredNorm() < before)) {
                    D = saved_D;
                    codes = saved_codes;
                    R = saved_R;
                }
            }
        }

        // Drop coefficients that became exactly zero.
        for (auto& c : codes) {
            c.erase(std::remove_if(c.begin(), c.end(), [](const detail::CodeEntry& e) { return e.value == 0.0; }),
                    c.end());
        }
        out.ksvd_objective.push_back(R.squaredNorm());
    }

    // --- Float-round d_low, then refresh residuals against the stored atoms.
    D = to_float_precision(D);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double nrm = D.col(k).norm();
        if (std::abs(nrm - 1.0) > 1e-6) D.col(k) = to_float_precision(D.col(k) / nrm);
    }

    // --- High-frequency dictionary: D_h = X_h A^T (A A^T + eps I)^-1.
    Eigen::MatrixXd AAt = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd XAt = Eigen::MatrixXd::Zero(ts.residuals.rows(), K);
    for (Eigen::Index n = 0; n < N; ++n) {
        const auto& c = codes[static_cast<std::size_t>(n)];
        for (const auto& a : c) {
            XAt.col(a.atom).noalias() += a.value * ts.residuals.col(n);
            for (const auto& b : c) AAt(a.atom, b.atom) += a.value * b.value;
        }
    }
    AAt.diagonal().array() += opt.ridge;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(AAt);
    Eigen::MatrixXd Dh = ldlt.solve(XAt.transpose()).transpose();

    out.dictionary.d_low = Dictionary(std::move(D), true);
    out.dictionary.d_high = to_float_precision(Dh);
    out.dictionary.pca = std::move(pca);
    out.dictionary.geometry = opt.geometry;
    out.codes.reserve(static_cast<std::size_t>(N));
    out.sample_residual_sq.reserve(static_cast<std::size_t>(N));
    for (Eigen::Index n = 0; n < N; ++n) {
        auto& c = codes[static_cast<std::size_t>(n)];
        std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.atom < b.atom; });
        SparseCode sc;
        sc.dim_k = static_cast<std::size_t>(K);
        for (const auto& e : c) {
            sc.indices.push_back(e.atom);
            sc.values.push_back(e.value);
        }
        out.sample_residual_sq.push_back(
            (P.col(n) - sc.decode(out.dictionary.d_low.atoms)).squaredNorm());
        out.codes.push_back(std::move(sc));
    }
    return out;
}

} // namespace iqt
