#pragma once

// Orthogonal matching pursuit on a precomputed Gram matrix (Batch-OMP
// style): greedy atom selection, least-squares refit through an incremental
// Cholesky factor of the support Gram block.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/sparse_code.hpp"

namespace iqt {

class OmpSolver {
public:
    explicit OmpSolver(const Eigen::MatrixXd& atoms) : gram_(atoms.transpose() * atoms), atoms_(&atoms) {}
    OmpSolver(const Eigen::MatrixXd& atoms, Eigen::MatrixXd gram) : gram_(std::move(gram)), atoms_(&atoms) {}

    const Eigen::MatrixXd& gram() const { return gram_; }

    SparseCode solve(const Eigen::VectorXd& y, std::size_t sparsity) const {
        if (y.size() != atoms_->rows()) throw GeometryError("omp: signal length does not match dictionary rows");
        return solve_correlations(atoms_->transpose() * y, y.squaredNorm(), sparsity);
    }

    /// Codes a signal given c = D^T y and ||y||^2. Selects at most `sparsity`
    /// atoms; stops early once the residual vanishes. Atoms linearly
    /// dependent on the current support are skipped.
    SparseCode solve_correlations(const Eigen::VectorXd& corr, double y_sq, std::size_t sparsity) const {
        const Eigen::Index K = gram_.cols();
        if (sparsity == 0) throw ParameterError("omp: sparsity must be positive");
        if (static_cast<Eigen::Index>(sparsity) > std::min<Eigen::Index>(K, atoms_->rows())) {
            throw ParameterError("omp: sparsity exceeds min(n, K)");
        }
        std::vector<Eigen::Index> support;
        std::vector<char> blocked(static_cast<std::size_t>(K), 0);
        Eigen::MatrixXd L(sparsity, sparsity);
        Eigen::VectorXd coef;
        Eigen::VectorXd residual_corr = corr;
        const double stop_energy = 1e-24 + 1e-14 * y_sq;

        while (support.size() < sparsity) {
            Eigen::Index best = -1;
            double best_abs = 0.0;
            for (Eigen::Index j = 0; j < K; ++j) {
                if (blocked[j]) continue;
                const double a = std::abs(residual_corr(j));
                if (a > best_abs) {
                    best_abs = a;
                    best = j;
                }
            }
            if (best < 0 || best_abs <= 1e-14 * std::sqrt(std::max(y_sq, 1e-300))) break;

            const auto s = static_cast<Eigen::Index>(support.size());
            const double gjj = gram_(best, best);
            double diag_sq = gjj;
            Eigen::VectorXd w;
            if (s > 0) {
                Eigen::VectorXd v(s);
                for (Eigen::Index a = 0; a < s; ++a) v(a) = gram_(support[a], best);
                w = L.topLeftCorner(s, s).triangularView<Eigen::Lower>().solve(v);
                diag_sq = gjj - w.squaredNorm();
            }
            blocked[best] = 1;
            if (!(diag_sq > 1e-10 * gjj) || gjj <= 0.0) continue; // dependent atom: drop it
            if (s > 0) {
                L.block(s, 0, 1, s) = w.transpose();
            }
            L(s, s) = std::sqrt(diag_sq);
            support.push_back(best);

            const Eigen::Index n = s + 1;
            Eigen::VectorXd rhs(n);
            for (Eigen::Index a = 0; a < n; ++a) rhs(a) = corr(support[a]);
            const auto Ln = L.topLeftCorner(n, n).triangularView<Eigen::Lower>();
            coef = Ln.transpose().solve(Ln.solve(rhs));

            residual_corr = corr;
            for (Eigen::Index a = 0; a < n; ++a) residual_corr.noalias() -= coef(a) * gram_.col(support[a]);
            const double residual_energy = y_sq - coef.dot(rhs);
            if (residual_energy <= stop_energy) break;
        }

        std::vector<std::size_t> order(support.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
        SparseCode out;
        out.dim_k = static_cast<std::size_t>(K);
        for (std::size_t a : order) {
            if (coef(static_cast<Eigen::Index>(a)) == 0.0) continue;
            out.indices.push_back(static_cast<std::uint32_t>(support[a]));
            out.values.push_back(coef(static_cast<Eigen::Index>(a)));
        }
        return out;
    }

private:
    Eigen::MatrixXd gram_;
    const Eigen::MatrixXd* atoms_;
};

inline SparseCode omp(const Dictionary& dict, const Eigen::VectorXd& y, std::size_t sparsity) {
    return OmpSolver(dict.atoms).solve(y, sparsity);
}

} // namespace iqt
