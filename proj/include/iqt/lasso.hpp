#pragma once

// L1-regularised least squares
//     minimise  1/2 ||D a - y||^2 + lambda ||a||_1
// by cyclic coordinate descent with soft-thresholding on the Gram matrix.
// Convergence is declared on the KKT residual, not on coefficient change.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "iqt/error.hpp"
#include "iqt/sparse_code.hpp"

namespace iqt {

struct LassoOptions {
    double tol = 1e-6;
    int max_iter = 1000;
    /// Record the objective after every sweep (index 0 is the start point).
    bool record_objective = false;
};

struct ConvergenceWarning {
    double kkt_residual = 0.0;
    int sweeps = 0;
};

struct LassoResult {
    SparseCode code;
    double kkt_residual = 0.0;
    int sweeps = 0;
    std::optional<ConvergenceWarning> warning;
    std::vector<double> objective_trace;

    bool converged() const { return !warning.has_value(); }
};

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

/// max_i of the KKT violation given the gradient g = D^T (D a - y).
inline double kkt_violation(const Eigen::VectorXd& grad, const Eigen::VectorXd& alpha, double lambda) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        double v;
        if (alpha(i) != 0.0) {
            v = std::abs(grad(i) + lambda * (alpha(i) > 0.0 ? 1.0 : -1.0));
        } else {
            v = std::max(0.0, std::abs(grad(i)) - lambda);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

inline double kkt_residual(const Dictionary& dict, const Eigen::VectorXd& y, double lambda, const SparseCode& code) {
    const Eigen::VectorXd alpha = code.dense();
    const Eigen::VectorXd grad = dict.atoms.transpose() * (dict.atoms * alpha - y);
    return kkt_violation(grad, alpha, lambda);
}

inline double lasso_objective(const Dictionary& dict, const Eigen::VectorXd& y, double lambda, const Eigen::VectorXd& alpha) {
    return 0.5 * (dict.atoms * alpha - y).squaredNorm() + lambda * alpha.lpNorm<1>();
}

inline double lasso_objective(const Dictionary& dict, const Eigen::VectorXd& y, double lambda, const SparseCode& code) {
    return lasso_objective(dict, y, lambda, code.dense());
}

/// Coordinate-descent solver bound to one dictionary. Holds the Gram matrix
/// so that many signals can be coded against the same atoms; immutable after
/// construction and safe to share across threads.
class LassoSolver {
public:
    explicit LassoSolver(const Eigen::MatrixXd& atoms) : gram_(atoms.transpose() * atoms), atoms_(&atoms) {}

    const Eigen::MatrixXd& gram() const { return gram_; }

    LassoResult solve(const Eigen::VectorXd& y, double lambda, const LassoOptions& opt = {}) const {
        if (y.size() != atoms_->rows()) throw GeometryError("lasso: signal length does not match dictionary rows");
        const Eigen::VectorXd corr = atoms_->transpose() * y;
        return solve_correlations(corr, y.squaredNorm(), lambda, opt);
    }

    /// Solves given c = D^T y and ||y||^2 (the latter only feeds the
    /// objective trace).
    LassoResult solve_correlations(const Eigen::VectorXd& corr, double y_sq, double lambda,
                                   const LassoOptions& opt = {}) const {
        if (!(lambda > 0.0)) throw ParameterError("lasso: lambda must be > 0");
        const Eigen::Index K = gram_.cols();
        if (corr.size() != K) throw GeometryError("lasso: correlation length does not match atom count");

        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(K);
        Eigen::VectorXd q = Eigen::VectorXd::Zero(K); // G * alpha
        std::vector<Eigen::Index> active;
        LassoResult res;
        auto objective = [&]() { return 0.5 * (alpha.dot(q) - 2.0 * alpha.dot(corr) + y_sq) + lambda * alpha.lpNorm<1>(); };
        if (opt.record_objective) res.objective_trace.push_back(objective());

        auto update = [&](Eigen::Index j) {
            const double gjj = gram_(j, j);
            if (gjj <= 0.0) return;
            const double old = alpha(j);
            const double rho = corr(j) - (q(j) - gjj * old);
            const double next = soft_threshold(rho, lambda) / gjj;
            if (next != old) {
                q.noalias() += (next - old) * gram_.col(j);
                alpha(j) = next;
            }
        };

        auto refresh = [&]() {
            q.setZero();
            active.clear();
            for (Eigen::Index j = 0; j < K; ++j) {
                if (alpha(j) != 0.0) {
                    q.noalias() += alpha(j) * gram_.col(j);
                    active.push_back(j);
                }
            }
            return kkt_violation(q - corr, alpha, lambda);
        };

        double kkt = kkt_violation(q - corr, alpha, lambda);
        int sweep = 0;
        std::vector<Eigen::Index> previous;
        while (kkt > opt.tol && sweep < opt.max_iter) {
            ++sweep;
            for (Eigen::Index j = 0; j < K; ++j) update(j);
            // Refresh q from the support to keep incremental drift out of the
            // convergence test.
            kkt = refresh();
            if (opt.record_objective) res.objective_trace.push_back(objective());
            if (kkt <= opt.tol) break;
            const bool stable = active == previous;
            previous = active;
            if (stable && refine_support(alpha, corr, lambda, active)) {
                kkt = refresh();
                if (opt.record_objective) res.objective_trace.push_back(objective());
            }
        }
        res.code = SparseCode::from_dense(alpha);
        res.kkt_residual = kkt;
        res.sweeps = sweep;
        if (kkt > opt.tol) res.warning = ConvergenceWarning{kkt, sweep};
        return res;
    }

private:
    /// Newton steps on the support with signs held fixed: moves toward the
    /// minimiser of the restricted quadratic, stopping at the first sign
    /// change and dropping that atom. Never increases the objective. Returns
    /// whether alpha changed.
    bool refine_support(Eigen::VectorXd& alpha, const Eigen::VectorXd& corr, double lambda,
                        std::vector<Eigen::Index> support) const {
        bool changed = false;
        const std::size_t max_steps = support.size() + 1;
        for (std::size_t step = 0; step < max_steps && !support.empty(); ++step) {
            const auto n = static_cast<Eigen::Index>(support.size());
            Eigen::MatrixXd g(n, n);
            Eigen::VectorXd a(n), rhs(n), sgn(n);
            for (Eigen::Index r = 0; r < n; ++r) {
                a(r) = alpha(support[r]);
                sgn(r) = a(r) > 0.0 ? 1.0 : -1.0;
                rhs(r) = corr(support[r]) - lambda * sgn(r);
                for (Eigen::Index c = 0; c < n; ++c) g(r, c) = gram_(support[r], support[c]);
            }
            Eigen::VectorXd x;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
            const Eigen::VectorXd piv = ldlt.vectorD();
            if (ldlt.info() == Eigen::Success && piv.minCoeff() > 1e-10 * piv.cwiseAbs().maxCoeff()) {
                x = ldlt.solve(rhs);
            } else {
                x = singular_step(g, rhs, a, sgn);
            }
            if (x.size() == 0 || !x.allFinite()) break;

            double t = 1.0;
            Eigen::Index cross = -1;
            for (Eigen::Index r = 0; r < n; ++r) {
                if (x(r) * sgn(r) <= 0.0) {
                    const double tr = a(r) / (a(r) - x(r));
                    if (tr < t || (cross < 0 && tr <= t)) {
                        t = tr;
                        cross = r;
                    }
                }
            }
            Eigen::VectorXd next = a + t * (x - a);
            if (cross >= 0) next(cross) = 0.0;
            auto restricted = [&](const Eigen::VectorXd& v) {
                return 0.5 * v.dot(g * v) - v.dot(rhs + lambda * sgn) + lambda * v.lpNorm<1>();
            };
            if (!(restricted(next) <= restricted(a))) break;
            for (Eigen::Index r = 0; r < n; ++r) alpha(support[r]) = next(r);
            changed = true;
            if (cross < 0) break;
            support.erase(support.begin() + cross);
        }
        return changed;
    }

    /// Step for a singular support: the pseudo-inverse solution, or when rhs
    /// leaves the range of g, the ray along the null-space part of rhs (a
    /// direction of unbounded descent that must end at a sign change). Empty
    /// on failure.
    static Eigen::VectorXd singular_step(const Eigen::MatrixXd& g, const Eigen::VectorXd& rhs, const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& sgn) {
        const Eigen::Index n = g.rows();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
        if (eig.info() != Eigen::Success) return {};
        const Eigen::VectorXd& ev = eig.eigenvalues();
        const Eigen::MatrixXd& V = eig.eigenvectors();
        const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
        const Eigen::VectorXd vr = V.transpose() * rhs;
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd null_part = Eigen::VectorXd::Zero(n);
        bool singular = false;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (ev(r) > cutoff) {
                coef(r) = vr(r) / ev(r);
            } else {
                null_part(r) = vr(r);
                singular = true;
            }
        }
        if (singular && null_part.norm() > 1e-12 * std::max(rhs.norm(), 1e-300)) {
            const Eigen::VectorXd z = V * null_part;
            double tz = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < n; ++r) {
                if (z(r) * sgn(r) < 0.0) tz = std::min(tz, -a(r) / z(r));
            }
            if (!std::isfinite(tz)) return {};
            return a + tz * z;
        }
        return V * coef;
    }

    Eigen::MatrixXd gram_;
    const Eigen::MatrixXd* atoms_;
};

inline LassoResult lasso_cd(const Dictionary& dict, const Eigen::VectorXd& y, double lambda,
                            const LassoOptions& opt = {}) {
    return LassoSolver(dict.atoms).solve(y, lambda, opt);
}

} // namespace iqt
